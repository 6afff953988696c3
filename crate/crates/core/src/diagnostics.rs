//! Reconstruction of the fields from `(phi, mem)`, fronts, norms and growth fits.

use crate::coords::{x_to_z, PointX, SupportStrip};
use crate::error::{Error, Result};
use crate::fields::{FieldKind, InitialData};
use crate::quadrature::{Discretization, Grid1D};

/// Refinement of the quadrature node set used by the per-line maximum scan.
pub const SUP_SCAN_REFINE: usize = 4;
const GOLDEN_ITERS: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontParams {
    pub b: f64,
    pub k: f64,
    /// Axis-mass threshold of `omega0`.
    pub z1: Option<f64>,
    /// Axis-mass threshold of `f1`.
    pub z2: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Fronts {
    pub f1: Option<f64>,
    pub f2: Option<f64>,
}

/// One recorded state.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub phi: Vec<f64>,
    pub mem: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub phi_left: f64,
    pub phi_sup: f64,
    pub omega_left: f64,
    pub sup_omega: f64,
    pub bkm: f64,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub delta: f64,
    pub gamma_est: Option<f64>,
    pub tail_bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub rows: Vec<SeriesRow>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&SeriesRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

pub fn h_profile(grid: &Grid1D, phi: &[f64]) -> Vec<f64> {
    grid.nodes.iter().zip(phi).map(|(z, p)| z + p).collect()
}

fn crossing(grid: &Grid1D, g: &[f64], i: usize) -> Option<f64> {
    let (a, b) = (g[i], g[i + 1]);
    if a == 0.0 {
        return Some(grid.nodes[i]);
    }
    if b == 0.0 {
        return Some(grid.nodes[i + 1]);
    }
    ((a < 0.0) != (b < 0.0)).then(|| {
        let (za, zb) = (grid.nodes[i], grid.nodes[i + 1]);
        za + a / (a - b) * (zb - za)
    })
}

/// Smallest root of `H = level`.
pub fn first_root(grid: &Grid1D, h: &[f64], level: f64) -> Option<f64> {
    let g: Vec<f64> = h.iter().map(|v| v - level).collect();
    (0..g.len().saturating_sub(1)).find_map(|i| crossing(grid, &g, i))
}

/// Largest root of `H = level`.
pub fn last_root(grid: &Grid1D, h: &[f64], level: f64) -> Option<f64> {
    let g: Vec<f64> = h.iter().map(|v| v - level).collect();
    (0..g.len().saturating_sub(1)).rev().find_map(|i| crossing(grid, &g, i))
}

pub fn fronts(grid: &Grid1D, h: &[f64], b: f64) -> Fronts {
    Fronts { f1: first_root(grid, h, -b), f2: last_root(grid, h, 0.0) }
}

pub fn h_profile_and_fronts(grid: &Grid1D, phi: &[f64], params: &FrontParams) -> (Vec<f64>, Fronts) {
    let h = h_profile(grid, phi);
    let f = fronts(grid, &h, params.b);
    (h, f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Omega,
    Rho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    X,
    Z,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub values: Vec<f64>,
    /// Some point had `z1` outside the grid; `phi` and `mem` were held constant there.
    pub extrapolated: bool,
}

/// Evaluate `omega` or `rho` at time-`t` state `(phi, mem)` through the transport
/// formulas. Points are `(z1, z2)` or `(x1, x2)` according to `frame`.
pub fn reconstruct(
    field: Field,
    grid: &Grid1D,
    phi: &[f64],
    mem: &[f64],
    data: &InitialData,
    frame: Frame,
    points: &[(f64, f64)],
) -> Result<Reconstruction> {
    for len in [phi.len(), mem.len()] {
        if len != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: len });
        }
    }
    let mut extrapolated = false;
    let mut values = Vec::with_capacity(points.len());
    for &(a, b) in points {
        let z1 = match frame {
            Frame::Z => a,
            Frame::X => x_to_z(PointX::new(a, b))?.z1,
        };
        let (p, out_p) = grid.interpolate(phi, z1);
        let (m, out_m) = grid.interpolate(mem, z1);
        extrapolated |= out_p || out_m;
        let v = match frame {
            Frame::Z => {
                let u = b - p;
                match field {
                    Field::Rho => data.eval_z(FieldKind::Rho0, z1, u),
                    Field::Omega => data.eval_z(FieldKind::Omega0, z1, u) + data.eval_z(FieldKind::F1, z1, u) * m,
                }
            }
            Frame::X => {
                let y1 = a * (0.5 * p).exp();
                let y2 = b * (-0.5 * p).exp();
                let r = data.eval_x(FieldKind::Rho0, y1, y2);
                match field {
                    Field::Rho => r,
                    Field::Omega => data.eval_x(FieldKind::Omega0, y1, y2) + r * (-0.5 * p).exp() * m / a,
                }
            }
        };
        values.push(v);
    }
    Ok(Reconstruction { values, extrapolated })
}

/// Maximum of `f` on `[lo, hi]`: uniform scan on `n` nodes, then golden-section
/// polish on the two cells around the discrete argmax.
pub fn scan_max(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for k in 0..n {
        let v = f(lo + k as f64 * step);
        if v > best {
            best = v;
            arg = k;
        }
    }
    let mut a = lo + arg.saturating_sub(1) as f64 * step;
    let mut b = (lo + (arg + 1).min(n - 1) as f64 * step).min(hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    best.max(fc).max(fd)
}

/// Line-wise exact sup of `|omega|`. When one of the two data components vanishes
/// the per-line maxima do not depend on time and are cached.
#[derive(Clone, Debug)]
pub struct SupNormOmega {
    data: InitialData,
    z1: Vec<f64>,
    intervals: Vec<Option<(f64, f64)>>,
    n_scan: usize,
    line_om0: Vec<f64>,
    line_f1: Vec<f64>,
}

impl SupNormOmega {
    pub fn new(data: &InitialData, disc: &Discretization) -> Self {
        let n_scan = SUP_SCAN_REFINE * (disc.n_u() - 1) + 1;
        let mut s = Self {
            data: data.clone(),
            z1: disc.grid.nodes.clone(),
            intervals: disc.intervals.clone(),
            n_scan,
            line_om0: Vec::new(),
            line_f1: Vec::new(),
        };
        let per_line = |kind: FieldKind| -> Vec<f64> {
            s.z1.iter()
                .zip(&s.intervals)
                .map(|(&z1, iv)| match iv {
                    Some((lo, hi)) => scan_max(*lo, *hi, n_scan, |u| data.eval_z(kind, z1, u).abs()),
                    None => 0.0,
                })
                .collect()
        };
        let has_om0 = disc.has_vorticity();
        let has_f1 = disc.has_forcing();
        let line_om0 = if has_f1 && has_om0 { Vec::new() } else { per_line(FieldKind::Omega0) };
        let line_f1 = if has_f1 && has_om0 { Vec::new() } else { per_line(FieldKind::F1) };
        s.line_om0 = line_om0;
        s.line_f1 = line_f1;
        s
    }

    /// Maximum of `|omega0(z1,u) + f1(z1,u) mem|` over the support on line `i`.
    pub fn line(&self, i: usize, mem: f64) -> f64 {
        let Some((lo, hi)) = self.intervals[i] else { return 0.0 };
        if !self.line_om0.is_empty() && self.data.rho0.is_zero() {
            return self.line_om0[i];
        }
        if !self.line_f1.is_empty() && self.data.omega0.is_zero() {
            return self.line_f1[i] * mem.abs();
        }
        let z1 = self.z1[i];
        scan_max(lo, hi, self.n_scan, |u| {
            (self.data.eval_z(FieldKind::Omega0, z1, u) + self.data.eval_z(FieldKind::F1, z1, u) * mem).abs()
        })
    }

    pub fn eval(&self, mem: &[f64]) -> f64 {
        (0..self.z1.len()).map(|i| self.line(i, mem[i])).fold(0.0, f64::max)
    }
}

/// Smallest `x1` reached by the support boundary. The leftmost boundary point of the
/// initial box on line `z1` is `max(delta0, e^{z1}/C2)`, and it moves by `e^{-phi/2}`.
pub fn delta_min_x1(grid: &Grid1D, phi: &[f64], strip: &SupportStrip) -> f64 {
    let c2 = strip.box_x.x2_max;
    grid.nodes
        .iter()
        .zip(phi)
        .filter(|(&z1, _)| z1 <= strip.z1_max)
        .map(|(&z1, &p)| strip.delta0.max(z1.exp() / c2) * (-0.5 * p).exp())
        .fold(f64::INFINITY, f64::min)
}

/// `min Omega` over `{z1 <= Z1 : H <= -B}`.
pub fn gamma_est(grid: &Grid1D, omega: &[f64], h: &[f64], params: &FrontParams) -> Option<f64> {
    let z1_cap = params.z1?;
    let m = grid
        .nodes
        .iter()
        .zip(omega.iter().zip(h))
        .filter(|(&z, (_, &hv))| z <= z1_cap && hv <= -params.b)
        .map(|(_, (&o, _))| o)
        .fold(f64::INFINITY, f64::min);
    m.is_finite().then_some(m)
}

/// `delta(t)` per snapshot and the trapezoid accumulation of `sups`.
pub fn delta_and_bkm(history: &[Snapshot], sups: &[f64], grid: &Grid1D, strip: &SupportStrip) -> (Vec<f64>, Vec<f64>) {
    let delta = history.iter().map(|s| delta_min_x1(grid, &s.phi, strip)).collect();
    let mut bkm = Vec::with_capacity(sups.len());
    let mut acc = 0.0;
    for (k, s) in sups.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * (history[k].t - history[k - 1].t) * (s + sups[k - 1]);
        }
        bkm.push(acc);
    }
    (delta, bkm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthQuantity {
    PhiLeft,
    InvDelta,
    /// Gradient-growth proxy; defined as `1/delta`.
    GradProxy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub quality: f64,
    pub samples: usize,
}

pub const GROWTH_FIT_MIN_SAMPLES: usize = 10;

/// Least-squares line through `(x, y)` with its R^2.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let quality = if syy > 0.0 { 1.0 - ss_res / syy } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    (slope, intercept, quality)
}

/// Fit over samples with `t` in `[t0, t1]`: `phi_left` linearly, the others in log scale.
pub fn growth_fit(series: &DiagnosticsSeries, quantity: GrowthQuantity, t0: f64, t1: f64) -> Result<GrowthFit> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for r in series.rows.iter().filter(|r| r.t >= t0 && r.t <= t1) {
        let v = match quantity {
            GrowthQuantity::PhiLeft => r.phi_left,
            GrowthQuantity::InvDelta | GrowthQuantity::GradProxy => {
                if !(r.delta > 0.0) {
                    continue;
                }
                -r.delta.ln()
            }
        };
        x.push(r.t);
        y.push(v);
    }
    if x.len() < GROWTH_FIT_MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: GROWTH_FIT_MIN_SAMPLES, have: x.len() });
    }
    let (rate, intercept, quality) = linear_fit(&x, &y);
    Ok(GrowthFit { rate, intercept, quality, samples: x.len() })
}

/// Largest observed `log(1 + L) / int M`, the constant in the Gronwall-type bound.
pub fn gronwall_constant(series: &DiagnosticsSeries) -> Option<f64> {
    series
        .rows
        .iter()
        .filter(|r| r.bkm > 0.0)
        .map(|r| r.phi_sup.ln_1p() / r.bkm)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleFrontCheck {
    pub t: f64,
    pub fronts: Fronts,
    /// Range of the discrete slope of `H` over the whole grid.
    pub dh_min: f64,
    pub dh_max: f64,
    /// Range of the discrete slope over cells left of `F1`.
    pub front_dh: Option<(f64, f64)>,
    pub eps_meas: Option<f64>,
    pub gamma_est: Option<f64>,
    /// `Omega(Zmin) - Omega(F1)` and its allowed bound.
    pub omega_gap: Option<(f64, f64)>,
    /// Phase lower bound just right of `F2`, when `F2 < -10`.
    pub phase_bound: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontLawReport {
    pub samples: Vec<SampleFrontCheck>,
    pub t0: Option<f64>,
    /// `B >= max(1, K)` held.
    pub params_ok: bool,
    pub slope_ok: bool,
    pub eps_max: Option<f64>,
    /// `(1/gamma + t0) e^{K-B}` with the smallest measured `gamma`.
    pub eps_reference: Option<f64>,
    pub gamma_ok: bool,
    pub gamma_range: Option<(f64, f64)>,
    pub omega_gap_ok: bool,
    pub phase_ok: bool,
    /// Some sample lacked a front needed by a check.
    pub missing_fronts: bool,
}

/// Front laws over a recorded history. `tol` is the slack on the upper slope bound.
pub fn front_law_checks(history: &[Snapshot], grid: &Grid1D, params: &FrontParams, tol: f64) -> FrontLawReport {
    let h_step = grid.h;
    let mut samples = Vec::with_capacity(history.len());
    let mut t0 = None;
    let mut missing = false;
    for snap in history {
        let (h, fr) = h_profile_and_fronts(grid, &snap.phi, params);
        let slopes: Vec<f64> = h.windows(2).map(|w| (w[1] - w[0]) / h_step).collect();
        let dh_min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let dh_max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let front_dh = fr.f1.and_then(|f1| {
            let sel: Vec<f64> = (0..slopes.len()).filter(|&i| grid.nodes[i + 1] <= f1).map(|i| slopes[i]).collect();
            (!sel.is_empty()).then(|| {
                (sel.iter().copied().fold(f64::INFINITY, f64::min), sel.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            })
        });
        let eps_meas = front_dh.map(|(lo, _)| (1.0 - lo).max(0.0));
        if t0.is_none() && fr.f1.is_some() {
            if let Some(z1) = params.z1 {
                if grid.interpolate(&h, z1).0 >= 0.0 {
                    t0 = Some(snap.t);
                }
            }
        }
        let omega_gap = match (fr.f1, eps_meas) {
            (Some(f1), Some(eps)) if eps < 1.0 => {
                let gap = snap.omega[0] - grid.interpolate(&snap.omega, f1).0;
                Some((gap, (params.k - params.b).exp() / (1.0 - eps) * (1.0 + tol)))
            }
            _ => None,
        };
        let phase_bound = fr.f2.filter(|&f2| f2 < -10.0).map(|f2| {
            grid.nodes
                .iter()
                .zip(&snap.phi)
                .filter(|(&z, _)| z >= f2 && z <= f2 + 1.0)
                .all(|(_, &p)| p >= 0.5 * f2.abs())
        });
        if fr.f1.is_none() {
            missing = true;
        }
        samples.push(SampleFrontCheck {
            t: snap.t,
            fronts: fr,
            dh_min,
            dh_max,
            front_dh,
            eps_meas,
            gamma_est: gamma_est(grid, &snap.omega, &h, params),
            omega_gap,
            phase_bound,
        });
    }
    let past_t0 = |s: &&SampleFrontCheck| t0.is_some_and(|t0| s.t >= t0);
    let slope_ok = samples
        .iter()
        .all(|s| s.front_dh.is_none_or(|(lo, hi)| hi <= 1.0 + tol && lo > 0.0 && s.dh_max <= 1.0 + tol));
    let eps_max = samples.iter().filter_map(|s| s.eps_meas).reduce(f64::max);
    let gammas: Vec<f64> = samples.iter().filter(past_t0).filter_map(|s| s.gamma_est).collect();
    let gamma_ok = t0.is_some() && samples.iter().filter(past_t0).all(|s| s.gamma_est.is_some_and(|g| g > 0.0));
    let gamma_range = (!gammas.is_empty()).then(|| {
        (gammas.iter().copied().fold(f64::INFINITY, f64::min), gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    });
    let eps_reference = match (gamma_range, t0) {
        (Some((g, _)), Some(t0)) if g > 0.0 => Some((1.0 / g + t0) * (params.k - params.b).exp()),
        _ => None,
    };
    FrontLawReport {
        t0,
        params_ok: params.b >= params.k.max(1.0),
        slope_ok,
        eps_max,
        eps_reference,
        gamma_ok,
        gamma_range,
        omega_gap_ok: samples.iter().all(|s| s.omega_gap.is_none_or(|(g, b)| g <= b)),
        phase_ok: samples.iter().all(|s| s.phase_bound != Some(false)),
        missing_fronts: missing,
        samples,
    }
}

/// Sample the transported fields on the `(z1, z2)` tensor grid used by snapshot files:
/// every `stride`-th z1 node, `n_z2` points spanning the transported support.
pub fn snapshot_block(
    grid: &Grid1D,
    snap: &Snapshot,
    data: &InitialData,
    stride: usize,
    n_z2: usize,
) -> Vec<[f64; 4]> {
    let mut out = Vec::new();
    for i in (0..grid.len()).step_by(stride.max(1)) {
        let z1 = grid.nodes[i];
        let Some((lo, hi)) = data.strip.line_interval(z1) else { continue };
        let p = snap.phi[i];
        for j in 0..n_z2 {
            let u = lo + (hi - lo) * j as f64 / (n_z2 - 1) as f64;
            let om = data.eval_z(FieldKind::Omega0, z1, u) + data.eval_z(FieldKind::F1, z1, u) * snap.mem[i];
            out.push([z1, u + p, om, data.eval_z(FieldKind::Rho0, z1, u)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BumpProfile, Profile};
    use crate::quadrature::QuadratureRule;
    use approx::assert_relative_eq;

    fn standard() -> Profile {
        Profile::Product { x1: BumpProfile::new(2.0, 1.0, 1.0), x2: BumpProfile::new(0.0, 2.0, 1.0) }
    }

    fn boussinesq() -> InitialData {
        InitialData::new(Profile::Zero, standard(), None, None).unwrap()
    }

    fn euler() -> InitialData {
        InitialData::new(standard(), Profile::Zero, None, None).unwrap()
    }

    fn grid() -> Grid1D {
        Grid1D::uniform(-20.0, 3.0, 231).unwrap()
    }

    fn params(data: &InitialData) -> FrontParams {
        FrontParams { b: 4.0, k: data.strip.k, z1: Some(-2.0), z2: Some(-2.0) }
    }

    #[test]
    fn fronts_at_t0() {
        let g = grid();
        let data = euler();
        let (h, f) = h_profile_and_fronts(&g, &vec![0.0; g.len()], &params(&data));
        assert_eq!(h, g.nodes);
        assert_relative_eq!(f.f1.unwrap(), -4.0, epsilon = 1e-12);
        assert_relative_eq!(f.f2.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_phase_shifts_f2() {
        let g = grid();
        let (_, f) = h_profile_and_fronts(&g, &vec![7.25; g.len()], &params(&euler()));
        assert_relative_eq!(f.f2.unwrap(), -7.25, epsilon = 1e-12);
        let (_, f) = h_profile_and_fronts(&g, &vec![50.0; g.len()], &params(&euler()));
        assert_eq!(f, Fronts { f1: None, f2: None });
    }

    #[test]
    fn f2_takes_rightmost_crossing() {
        let g = Grid1D::uniform(0.0, 4.0, 5).unwrap();
        let h = [1.0, -1.0, 1.0, -1.0, 1.0];
        assert_relative_eq!(last_root(&g, &h, 0.0).unwrap(), 3.5);
        assert_relative_eq!(first_root(&g, &h, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn reconstruct_at_t0_is_initial_data() {
        let g = grid();
        let data = boussinesq();
        let zeros = vec![0.0; g.len()];
        let pts: Vec<(f64, f64)> = (0..30).map(|k| (1.1 + 0.06 * k as f64, 0.05 + 0.06 * k as f64)).collect();
        let r = reconstruct(Field::Rho, &g, &zeros, &zeros, &data, Frame::X, &pts).unwrap();
        for (v, &(a, b)) in r.values.iter().zip(&pts) {
            let exact = data.eval_x(FieldKind::Rho0, a, b);
            assert!((v - exact).abs() <= 1e-12 * exact.abs().max(1e-300), "{v} {exact}");
        }
        let w = reconstruct(Field::Omega, &g, &zeros, &zeros, &data, Frame::X, &pts).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
        assert!(!r.extrapolated);
    }

    #[test]
    fn x_and_z_frames_agree() {
        let g = grid();
        let data = boussinesq();
        let phi: Vec<f64> = g.nodes.iter().map(|z| 0.8 / (1.0 + (0.5 * z).exp())).collect();
        let mem: Vec<f64> = phi.iter().map(|p| 0.3 * (0.5 * p).exp()).collect();
        let xpts: Vec<(f64, f64)> = (0..40).map(|k| (0.6 + 0.05 * k as f64, 0.02 + 0.035 * k as f64)).collect();
        let zpts: Vec<(f64, f64)> = xpts
            .iter()
            .map(|&(a, b)| {
                let z = x_to_z(PointX::new(a, b)).unwrap();
                (z.z1, z.z2)
            })
            .collect();
        for field in [Field::Omega, Field::Rho] {
            let rx = reconstruct(field, &g, &phi, &mem, &data, Frame::X, &xpts).unwrap();
            let rz = reconstruct(field, &g, &phi, &mem, &data, Frame::Z, &zpts).unwrap();
            for (a, b) in rx.values.iter().zip(&rz.values) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn points_off_grid_are_flagged() {
        let g = grid();
        let zeros = vec![0.0; g.len()];
        let r = reconstruct(Field::Rho, &g, &zeros, &zeros, &euler(), Frame::Z, &[(-30.0, 0.0)]).unwrap();
        assert!(r.extrapolated);
        assert!(matches!(
            reconstruct(Field::Rho, &g, &zeros, &zeros, &euler(), Frame::X, &[(0.0, 1.0)]),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn euler_transport_keeps_sup_and_kills_rho() {
        let g = grid();
        let data = euler();
        let phi: Vec<f64> = g.nodes.iter().map(|z| 3.0 / (1.0 + z.exp())).collect();
        let mem = vec![11.0; g.len()];
        let pts: Vec<(f64, f64)> = (0..400).map(|k| (-15.0 + 0.05 * k as f64, -8.0 + 0.04 * k as f64)).collect();
        let w = reconstruct(Field::Omega, &g, &phi, &mem, &data, Frame::Z, &pts).unwrap();
        assert!(w.values.iter().all(|&v| v <= data.omega0.sup()));
        let r = reconstruct(Field::Rho, &g, &phi, &mem, &data, Frame::Z, &pts).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sup_norm_matches_line_scans() {
        let data = boussinesq();
        let g = grid();
        let disc = Discretization::new(&data, g.clone(), QuadratureRule::simpson(33).unwrap()).unwrap();
        let sup = SupNormOmega::new(&data, &disc);
        let mem: Vec<f64> = g.nodes.iter().map(|z| 1.0 + 0.1 * z.abs()).collect();
        for i in (0..g.len()).step_by(17) {
            let Some((lo, hi)) = disc.intervals[i] else { continue };
            let brute = (0..=20000)
                .map(|k| lo + (hi - lo) * k as f64 / 20000.0)
                .map(|u| (data.eval_z(FieldKind::F1, g.nodes[i], u) * mem[i]).abs())
                .fold(0.0, f64::max);
            let s = sup.line(i, mem[i]);
            assert!(s >= brute - 1e-12 && s <= brute * (1.0 + 1e-7), "{s} {brute}");
        }
        let e = euler();
        let disc = Discretization::new(&e, g.clone(), QuadratureRule::simpson(33).unwrap()).unwrap();
        let sup = SupNormOmega::new(&e, &disc);
        assert!((sup.eval(&mem) - e.omega0.sup()).abs() <= 1e-8);
    }

    #[test]
    fn finer_scan_never_lowers_the_maximum() {
        let f = |u: f64| (3.0 * u).sin() * (-u * u).exp();
        let coarse = scan_max(-2.0, 2.0, 9, f);
        let fine = scan_max(-2.0, 2.0, 257, f);
        assert!(fine >= coarse - 1e-14);
        assert_relative_eq!(coarse, fine, epsilon = 1e-12);
    }

    #[test]
    fn delta_at_t0_and_under_motion() {
        let g = grid();
        let data = euler();
        let strip = data.strip;
        assert_relative_eq!(delta_min_x1(&g, &vec![0.0; g.len()], &strip), strip.delta0);
        let phi: Vec<f64> = g.nodes.iter().map(|z| 6.0 / (1.0 + (z + 5.0).exp())).collect();
        let d = delta_min_x1(&g, &phi, &strip);
        assert!(d >= strip.delta0 * (-0.5 * phi[0]).exp() * (1.0 - 1e-12));
    }

    #[test]
    fn growth_fits_recover_rates() {
        let mk = |f: &dyn Fn(f64) -> f64| DiagnosticsSeries {
            rows: (0..40)
                .map(|k| {
                    let t = 0.25 * k as f64;
                    SeriesRow {
                        t,
                        phi_left: 3.0 * t,
                        phi_sup: 3.0 * t,
                        omega_left: 0.0,
                        sup_omega: 1.0,
                        bkm: t,
                        f1: None,
                        f2: None,
                        delta: f(t),
                        gamma_est: None,
                        tail_bound: 0.0,
                    }
                })
                .collect(),
        };
        let s = mk(&|t| (-2.0 * t).exp());
        let lin = growth_fit(&s, GrowthQuantity::PhiLeft, 0.0, 100.0).unwrap();
        assert_relative_eq!(lin.rate, 3.0, epsilon = 1e-12);
        assert_relative_eq!(lin.quality, 1.0, epsilon = 1e-12);
        let lg = growth_fit(&s, GrowthQuantity::InvDelta, 0.0, 100.0).unwrap();
        assert_relative_eq!(lg.rate, 2.0, epsilon = 1e-10);
        let gp = growth_fit(&s, GrowthQuantity::GradProxy, 0.0, 100.0).unwrap();
        assert_eq!(gp, lg);
        assert!(matches!(
            growth_fit(&s, GrowthQuantity::PhiLeft, 8.0, 100.0),
            Err(Error::TooFewSamples { needed: 10, .. })
        ));
    }

    #[test]
    fn bkm_accumulates_by_trapezoid() {
        let g = Grid1D::uniform(-1.0, 2.0, 4).unwrap();
        let data = euler();
        let hist: Vec<Snapshot> = [0.0, 0.5, 1.5]
            .iter()
            .map(|&t| Snapshot { t, phi: vec![0.0; 4], mem: vec![0.0; 4], omega: vec![0.0; 4] })
            .collect();
        let (delta, bkm) = delta_and_bkm(&hist, &[1.0, 3.0, 1.0], &g, &data.strip);
        assert_eq!(bkm, vec![0.0, 1.0, 3.0]);
        assert!(delta.iter().all(|&d| d == data.strip.delta0));
    }

    #[test]
    fn front_checks_on_flat_history() {
        let g = grid();
        let data = euler();
        let p = params(&data);
        let snap = Snapshot { t: 0.0, phi: vec![0.0; g.len()], mem: vec![0.0; g.len()], omega: vec![0.5; g.len()] };
        let rep = front_law_checks(&[snap], &g, &p, 1e-6);
        let s = &rep.samples[0];
        assert_relative_eq!(s.dh_min, 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.dh_max, 1.0, epsilon = 1e-9);
        assert!(s.eps_meas.unwrap() < 1e-9);
        assert!(rep.slope_ok && rep.omega_gap_ok && rep.phase_ok);
        assert_eq!(s.gamma_est, Some(0.5));
        assert!(rep.t0.is_none());
    }
}
