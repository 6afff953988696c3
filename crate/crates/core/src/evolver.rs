//! Time integration of `dphi/dt = 2 Omega`, `dmem/dt = e^{phi/2}`.

use crate::config::{Problem, ScenarioConfig};
use crate::diagnostics::{
    delta_min_x1, gamma_est, h_profile_and_fronts, DiagnosticsSeries, Fronts, SeriesRow, Snapshot, SupNormOmega,
};
use crate::error::{Error, Result};
use crate::quadrature::{left_tail_bound, omega_profile, Discretization, Weight};

/// Ratio of tail bound to `Omega(Zmin)` above which a step is logged as tail-affected.
pub const TAIL_WARN_RATIO: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub phi: Vec<f64>,
    pub mem: Vec<f64>,
}

impl SolverState {
    pub fn zeros(n: usize) -> Self {
        Self { t: 0.0, phi: vec![0.0; n], mem: vec![0.0; n] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    TimeReached,
    PhiThreshold,
    StepCollapse,
    FrontHitLeftEdge,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::TimeReached => "time_reached",
            StopReason::PhiThreshold => "phi_threshold",
            StopReason::StepCollapse => "step_collapse",
            StopReason::FrontHitLeftEdge => "front_hit_left_edge",
        }
    }

    pub fn is_blowup(&self) -> bool {
        !matches!(self, StopReason::TimeReached)
    }
}

impl std::str::FromStr for StopReason {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "time_reached" => Ok(StopReason::TimeReached),
            "phi_threshold" => Ok(StopReason::PhiThreshold),
            "step_collapse" => Ok(StopReason::StepCollapse),
            "front_hit_left_edge" => Ok(StopReason::FrontHitLeftEdge),
            other => Err(format!("unknown stop status `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopStatus {
    pub reason: StopReason,
    pub t: f64,
    pub phi_left: f64,
    pub f2: Option<f64>,
    /// Last step size proposed by the controller.
    pub dt: f64,
}

/// Autonomous first-order system on a flat state vector.
pub trait OdeSystem {
    fn eval(&mut self, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// The reduced system on `y = [phi | mem]`.
pub struct ReducedSystem<'a> {
    pub disc: &'a Discretization,
    pub weight: Weight,
    w: Vec<f64>,
    omega: Vec<f64>,
}

impl<'a> ReducedSystem<'a> {
    pub fn new(disc: &'a Discretization, weight: Weight) -> Self {
        let n = disc.n_z1();
        Self { disc, weight, w: vec![0.0; n], omega: vec![0.0; n] }
    }

    /// `Omega` for a given state.
    pub fn omega(&mut self, phi: &[f64], mem: &[f64]) -> Result<&[f64]> {
        self.disc.inner_profile_w(phi, mem, self.weight, &mut self.w)?;
        omega_profile(&self.w, self.disc.grid.h, self.weight, &mut self.omega);
        Ok(&self.omega)
    }
}

impl OdeSystem for ReducedSystem<'_> {
    fn eval(&mut self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.disc.n_z1();
        if y.len() != 2 * n || dy.len() != 2 * n {
            return Err(Error::ShapeMismatch { expected: 2 * n, got: y.len().min(dy.len()) });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i % n, time: None });
        }
        let (phi, mem) = y.split_at(n);
        let om = self.omega(phi, mem)?;
        let (dphi, dmem) = dy.split_at_mut(n);
        for i in 0..n {
            dphi[i] = 2.0 * om[i];
            dmem[i] = (0.5 * phi[i]).exp();
        }
        Ok(())
    }
}

/// `(dphi, dmem)` at a state.
pub fn rhs(state: &SolverState, disc: &Discretization, weight: Weight) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = disc.n_z1();
    for len in [state.phi.len(), state.mem.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, got: len });
        }
    }
    let mut y = state.phi.clone();
    y.extend_from_slice(&state.mem);
    let mut dy = vec![0.0; 2 * n];
    ReducedSystem::new(disc, weight).eval(&y, &mut dy).map_err(|e| e.at_time(state.t))?;
    let dmem = dy.split_off(n);
    Ok((dy, dmem))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
}

impl StepControl {
    pub fn new(tol: f64, dt_min: f64) -> Self {
        Self { tol, dt_min, dt_max: f64::INFINITY, safety: 0.9, min_factor: 0.2, max_factor: 5.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Accepted { dt_used: f64, dt_next: f64, err: f64, rejected: usize },
    Collapsed { dt: f64, rejected: usize },
}

const C2: [f64; 1] = [1.0 / 5.0];
const C3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const C4: [f64; 3] = [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0];
const C5: [f64; 4] = [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0];
const C6: [f64; 5] = [1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0];
const B5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
const B4: [f64; 6] = [2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0];

/// Cash-Karp embedded 4(5) pair, advanced with the fifth-order weights.
pub struct CashKarp {
    k: [Vec<f64>; 6],
    stage: Vec<f64>,
    trial: Vec<f64>,
}

impl CashKarp {
    pub fn new(n: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; n]), stage: vec![0.0; n], trial: vec![0.0; n] }
    }

    /// One trial step from `y` (with `k[0]` already holding `f(y)`). Returns the
    /// scaled error norm, infinite when a stage went non-finite.
    fn trial<S: OdeSystem>(&mut self, sys: &mut S, y: &[f64], dt: f64, tol: f64) -> f64 {
        let rows: [&[f64]; 5] = [&C2, &C3, &C4, &C5, &C6];
        for (s, a) in rows.iter().enumerate() {
            for i in 0..y.len() {
                let mut acc = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    acc += aj * self.k[j][i];
                }
                self.stage[i] = y[i] + dt * acc;
            }
            let (_, rest) = self.k.split_at_mut(s + 1);
            if sys.eval(&self.stage, &mut rest[0]).is_err() {
                return f64::INFINITY;
            }
        }
        let mut err = 0.0f64;
        for i in 0..y.len() {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for j in 0..6 {
                hi += B5[j] * self.k[j][i];
                lo += B4[j] * self.k[j][i];
            }
            let ynew = y[i] + dt * hi;
            self.trial[i] = ynew;
            let scale = tol * (1.0 + y[i].abs().max(ynew.abs()));
            let e = (dt * (hi - lo)).abs() / scale;
            if !e.is_finite() || !ynew.is_finite() {
                return f64::INFINITY;
            }
            err = err.max(e);
        }
        err
    }

    /// Advance `y` by one accepted step no longer than `dt_cap`, starting from the
    /// proposal `dt_try`. Signals collapse when the step would fall below `dt_min`.
    pub fn step_adaptive<S: OdeSystem>(
        &mut self,
        sys: &mut S,
        y: &mut [f64],
        dt_try: f64,
        dt_cap: f64,
        ctl: &StepControl,
    ) -> Result<StepOutcome> {
        sys.eval(y, &mut self.k[0])?;
        let mut dt = dt_try.min(ctl.dt_max);
        let mut rejected = 0;
        loop {
            let clipped = dt >= dt_cap;
            let h = dt.min(dt_cap);
            let err = self.trial(sys, y, h, ctl.tol);
            if err <= 1.0 {
                let factor = if err == 0.0 {
                    ctl.max_factor
                } else {
                    (ctl.safety * err.powf(-0.2)).clamp(ctl.min_factor, ctl.max_factor)
                };
                let mut dt_next = h * factor;
                if clipped {
                    dt_next = dt_next.max(dt);
                }
                y.copy_from_slice(&self.trial);
                return Ok(StepOutcome::Accepted { dt_used: h, dt_next: dt_next.min(ctl.dt_max), err, rejected });
            }
            rejected += 1;
            let factor = if err.is_finite() { (ctl.safety * err.powf(-0.2)).max(ctl.min_factor) } else { ctl.min_factor };
            dt = h * factor.min(1.0);
            if dt < ctl.dt_min {
                return Ok(StepOutcome::Collapsed { dt, rejected });
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MonotonicityLog {
    pub checked_steps: usize,
    pub omega_z1: usize,
    pub phi_t: usize,
    pub mem_t: usize,
    pub f2_t: usize,
    /// Cells with `(H[i+1] - H[i]) / h > 1 + 10 tol`.
    pub dh_upper: usize,
    pub first: Option<String>,
}

impl MonotonicityLog {
    pub fn total(&self) -> usize {
        self.omega_z1 + self.phi_t + self.mem_t + self.f2_t + self.dh_upper
    }

    fn note(&mut self, what: &str, t: f64, node: usize) {
        if self.first.is_none() {
            log::warn!("monotonicity violated: {what} at t = {t}, node {node}");
            self.first = Some(format!("{what} at t={t} node={node}"));
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TailLog {
    pub max_bound: f64,
    pub max_ratio: f64,
    pub warnings: usize,
    pub first_warning_t: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub series: DiagnosticsSeries,
    pub status: StopStatus,
    pub history: Vec<Snapshot>,
    pub monotonicity: MonotonicityLog,
    pub tail: TailLog,
    pub steps: usize,
    pub rejected: usize,
}

impl RunResult {
    pub fn final_state(&self) -> Option<&Snapshot> {
        self.history.last()
    }
}

pub fn run(config: &ScenarioConfig) -> Result<RunResult> {
    run_problem(&Problem::new(config)?)
}

struct Recorder<'a> {
    problem: &'a Problem,
    sup: SupNormOmega,
    series: DiagnosticsSeries,
    history: Vec<Snapshot>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, phi: &[f64], mem: &[f64], omega: &[f64], sup: f64, bkm: f64, fronts: Fronts, tail: f64) {
        let grid = &self.problem.disc.grid;
        let h: Vec<f64> = grid.nodes.iter().zip(phi).map(|(z, p)| z + p).collect();
        self.series.rows.push(SeriesRow {
            t,
            phi_left: phi[0],
            phi_sup: phi.iter().fold(0.0f64, |m, p| m.max(p.abs())),
            omega_left: omega[0],
            sup_omega: sup,
            bkm,
            f1: fronts.f1,
            f2: fronts.f2,
            delta: delta_min_x1(grid, phi, &self.problem.data.strip),
            gamma_est: gamma_est(grid, omega, &h, &self.problem.fronts),
            tail_bound: tail,
        });
        self.history.push(Snapshot { t, phi: phi.to_vec(), mem: mem.to_vec(), omega: omega.to_vec() });
    }
}

pub fn run_problem(problem: &Problem) -> Result<RunResult> {
    let cfg = &problem.config;
    let disc = &problem.disc;
    let grid = &disc.grid;
    let n = disc.n_z1();
    let t_end = cfg.integrator.t_end;
    let ctl = StepControl::new(cfg.integrator.tol, cfg.integrator.dt_min);
    let mut rec = Recorder { problem, sup: SupNormOmega::new(&problem.data, disc), series: DiagnosticsSeries::default(), history: Vec::new() };
    let mut mono = MonotonicityLog::default();
    let mut tail = TailLog::default();

    if t_end == 0.0 {
        let status = StopStatus { reason: StopReason::TimeReached, t: 0.0, phi_left: 0.0, f2: Some(0.0), dt: cfg.integrator.dt_init };
        return Ok(RunResult { series: rec.series, status, history: rec.history, monotonicity: mono, tail, steps: 0, rejected: 0 });
    }

    let mut sys = ReducedSystem::new(disc, problem.weight);
    let mut rk = CashKarp::new(2 * n);
    let mut y = vec![0.0; 2 * n];
    let mut t = 0.0;
    let mut dt = cfg.integrator.dt_init;
    let edge = grid.z_min() + cfg.integrator.front_edge_cells * grid.h;

    let mut omega = sys.omega(&y[..n], &y[n..])?.to_vec();
    let mut sup = rec.sup.eval(&y[n..]);
    let mut bkm = 0.0;
    let (_, mut fronts) = h_profile_and_fronts(grid, &y[..n], &problem.fronts);
    let tail_at = |sup: f64, phi: &[f64]| {
        let l = phi.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        left_tail_bound(sup, grid.z_min(), problem.data.strip.k, l)
    };
    let bound0 = tail_at(sup, &y[..n]);
    rec.record(0.0, &y[..n], &y[n..], &omega, sup, bkm, fronts, bound0);

    let sample_dt = cfg.sampling.dt;
    let mut next_sample = 1usize;
    let (mut steps, mut rejected) = (0usize, 0usize);
    let mut prev = y.clone();

    let status = loop {
        let sample_t = if sample_dt > 0.0 { next_sample as f64 * sample_dt } else { f64::INFINITY };
        let target = sample_t.min(t_end);
        prev.copy_from_slice(&y);
        let outcome = rk.step_adaptive(&mut sys, &mut y, dt, target - t, &ctl).map_err(|e| e.at_time(t))?;
        let (dt_used, dt_next) = match outcome {
            StepOutcome::Accepted { dt_used, dt_next, rejected: r, .. } => {
                rejected += r;
                (dt_used, dt_next)
            }
            StepOutcome::Collapsed { dt: d, rejected: r } => {
                rejected += r;
                break StopStatus { reason: StopReason::StepCollapse, t, phi_left: y[0], f2: fronts.f2, dt: d };
            }
        };
        steps += 1;
        let landed = dt_used >= target - t;
        let t_new = if landed { target } else { t + dt_used };
        if t_new == t {
            break StopStatus { reason: StopReason::StepCollapse, t, phi_left: y[0], f2: fronts.f2, dt: dt_used };
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i % n, time: Some(t_new) });
        }
        let sup_new = rec.sup.eval(&y[n..]);
        bkm += 0.5 * (t_new - t) * (sup + sup_new);
        sup = sup_new;
        t = t_new;
        dt = dt_next;
        omega.copy_from_slice(sys.omega(&y[..n], &y[n..])?);
        let (_, fr) = h_profile_and_fronts(grid, &y[..n], &problem.fronts);

        mono.checked_steps += 1;
        let dh_slack = 10.0 * ctl.tol * grid.h;
        for i in 0..n {
            if y[i] < prev[i] {
                mono.phi_t += 1;
                mono.note("phi decreased in t", t, i);
            }
            if y[n + i] < prev[n + i] {
                mono.mem_t += 1;
                mono.note("mem decreased in t", t, i);
            }
            if i + 1 < n {
                if omega[i + 1] > omega[i] {
                    mono.omega_z1 += 1;
                    mono.note("Omega increased in z1", t, i);
                }
                if y[i + 1] - y[i] > dh_slack {
                    mono.dh_upper += 1;
                    mono.note("H slope above 1", t, i);
                }
            }
        }
        if let (Some(a), Some(b)) = (fronts.f2, fr.f2) {
            if b > a {
                mono.f2_t += 1;
                mono.note("F2 increased in t", t, 0);
            }
        }
        fronts = fr;

        let bound = tail_at(sup, &y[..n]);
        let ratio = if omega[0] > 0.0 { bound / omega[0] } else if bound > 0.0 { f64::INFINITY } else { 0.0 };
        tail.max_bound = tail.max_bound.max(bound);
        tail.max_ratio = tail.max_ratio.max(ratio);
        if ratio > TAIL_WARN_RATIO {
            tail.warnings += 1;
            if tail.first_warning_t.is_none() {
                log::warn!("left-tail bound {bound:e} exceeds {TAIL_WARN_RATIO:e} of Omega(Zmin) at t = {t}");
                tail.first_warning_t = Some(t);
            }
        }

        let stop = if y[0] >= cfg.integrator.phi_threshold {
            Some(StopReason::PhiThreshold)
        } else if fronts.f2.map_or(y[0] + grid.z_min() > 0.0, |f2| f2 <= edge) {
            Some(StopReason::FrontHitLeftEdge)
        } else if t >= t_end {
            Some(StopReason::TimeReached)
        } else {
            None
        };
        let on_sample = landed && target == sample_t;
        if on_sample {
            next_sample += 1;
        }
        if cfg.sampling.every_step || on_sample || stop.is_some() {
            rec.record(t, &y[..n], &y[n..], &omega, sup, bkm, fronts, bound);
        }
        if let Some(reason) = stop {
            break StopStatus { reason, t, phi_left: y[0], f2: fronts.f2, dt };
        }
    };
    if rec.history.last().is_some_and(|s| s.t != t) {
        let bound = tail_at(sup, &y[..n]);
        rec.record(t, &y[..n], &y[n..], &omega, sup, bkm, fronts, bound);
    }
    log::info!("run stopped: {} at t = {} after {steps} steps ({rejected} rejected)", status.reason.name(), status.t);
    Ok(RunResult { series: rec.series, status, history: rec.history, monotonicity: mono, tail, steps, rejected })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowupMethod {
    ReciprocalLinear,
    LastStep,
}

impl BlowupMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BlowupMethod::ReciprocalLinear => "reciprocal_linear",
            BlowupMethod::LastStep => "last_step",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupEstimate {
    pub tb: f64,
    pub method: BlowupMethod,
    pub uncertainty: f64,
    pub samples: usize,
}

/// Fit `1/phi_left` against `t` over the final decade of growth and take the root.
pub fn estimate_blowup_time(series: &DiagnosticsSeries, status: &StopStatus) -> Result<BlowupEstimate> {
    if !status.reason.is_blowup() {
        return Err(Error::NotBlowUp(status.reason.name().to_string()));
    }
    let t_last = series.rows.last().map_or(status.t, |r| r.t);
    let fallback = |samples| BlowupEstimate { tb: t_last, method: BlowupMethod::LastStep, uncertainty: f64::INFINITY, samples };
    let Some(end) = series.rows.last().map(|r| r.phi_left).filter(|&p| p > 0.0) else {
        return Ok(fallback(0));
    };
    let (t, inv): (Vec<f64>, Vec<f64>) =
        series.rows.iter().filter(|r| r.phi_left >= end / 10.0).map(|r| (r.t, 1.0 / r.phi_left)).unzip();
    if t.len() < 3 {
        return Ok(fallback(t.len()));
    }
    let (slope, intercept, _) = crate::diagnostics::linear_fit(&t, &inv);
    let tb = -intercept / slope;
    if !(slope < 0.0) || !tb.is_finite() {
        return Ok(fallback(t.len()));
    }
    Ok(BlowupEstimate { tb, method: BlowupMethod::ReciprocalLinear, uncertainty: (tb - t_last).abs(), samples: t.len() })
}
