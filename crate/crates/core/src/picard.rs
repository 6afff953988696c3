//! Fixed-point iteration on a space-time grid, used to cross-check the evolver.
//!
//! Iterate `n` takes the phase `phi_{n-1}`, forms `mem_n = int_0^t e^{phi_{n-1}/2}`,
//! transports the data with `phi_{n-1}`, and integrates the resulting stream
//! factor in time: `phi_n = 2 int_0^t Omega_n`. Time integrals use the trapezoid
//! rule on a uniform grid.

use crate::config::Problem;
use crate::diagnostics::SupNormOmega;
use crate::error::{Error, Result};
use crate::fields::FieldKind;
use crate::quadrature::omega_profile;

/// Values on grid nodes times columns; column `j` is `values[j * n_z1 .. (j + 1) * n_z1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub n_z1: usize,
    pub n_cols: usize,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(n_z1: usize, n_cols: usize) -> Self {
        Self { n_z1, n_cols, values: vec![0.0; n_z1 * n_cols] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n_z1 + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_z1..(j + 1) * self.n_z1]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.n_z1..(j + 1) * self.n_z1]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Cumulative trapezoid in time of `f(column)` on a uniform grid of spacing `dt`.
fn cumulative_trapezoid(src: &SpaceTimeField, dt: f64, f: impl Fn(f64) -> f64) -> SpaceTimeField {
    let mut out = SpaceTimeField::zeros(src.n_z1, src.n_cols);
    for j in 1..src.n_cols {
        for i in 0..src.n_z1 {
            let prev = out.values[(j - 1) * src.n_z1 + i];
            out.values[j * src.n_z1 + i] = prev + 0.5 * dt * (f(src.at(i, j - 1)) + f(src.at(i, j)));
        }
    }
    out
}

/// `mem(t) = int_0^t e^{phi/2} ds` from a phase history.
pub fn memory_from_phase(phi: &SpaceTimeField, dt: f64) -> SpaceTimeField {
    cumulative_trapezoid(phi, dt, |p| (0.5 * p).exp())
}

/// Gap profile between two fields sampled at the same points: the largest pointwise
/// difference on each row, then the running sup from the right.
pub fn iterate_gap(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<Vec<f64>> {
    if a.n_z1 != b.n_z1 {
        return Err(Error::ShapeMismatch { expected: a.n_z1, got: b.n_z1 });
    }
    if a.values.len() != b.values.len() {
        return Err(Error::ShapeMismatch { expected: a.values.len(), got: b.values.len() });
    }
    let mut g = vec![0.0f64; a.n_z1];
    for j in 0..a.n_cols {
        for (i, (x, y)) in a.column(j).iter().zip(b.column(j)).enumerate() {
            g[i] = g[i].max((x - y).abs());
        }
    }
    for i in (0..a.n_z1.saturating_sub(1)).rev() {
        g[i] = g[i].max(g[i + 1]);
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardStatus {
    Converged,
    MaxIter,
    Diverged,
}

impl PicardStatus {
    pub fn name(&self) -> &'static str {
        match self {
            PicardStatus::Converged => "converged",
            PicardStatus::MaxIter => "max_iter",
            PicardStatus::Diverged => "diverged",
        }
    }
}

/// Monitors of one iterate, as functions of time. `m`, `l` and `gamma` are running
/// suprema over earlier iterates and earlier times of `|omega|`, `|phi|`, `|Omega|`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub m: Vec<f64>,
    pub l: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `G_n(Zmin)`: largest vorticity difference to the previous iterate.
    pub omega_gap: f64,
    /// Sup-norm difference of `phi_n` and `phi_{n-1}`.
    pub phi_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub times: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub status: PicardStatus,
    pub iterations_used: usize,
    /// The vorticity gap is a sup over the truncated grid, not the whole half-plane.
    pub truncated_gap: bool,
}

impl IterationReport {
    pub fn converged(&self) -> bool {
        self.status == PicardStatus::Converged
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardSettings {
    pub t_end: f64,
    pub n_t: usize,
    pub max_iter: usize,
    pub gap_tol: f64,
    pub ceiling: f64,
}

impl PicardSettings {
    pub fn from_problem(problem: &Problem, t_end: f64) -> Self {
        let p = &problem.config.picard;
        Self { t_end, n_t: p.n_t, max_iter: p.max_iter, gap_tol: p.gap_tol, ceiling: p.ceiling }
    }
}

/// Number of time columns sampled by the vorticity gap.
const GAP_TIME_SAMPLES: usize = 32;

struct Iterate {
    phi_prev: SpaceTimeField,
    mem: SpaceTimeField,
}

/// Run the fixed-point iteration from `phi_0 = 0`.
pub fn picard_solve(problem: &Problem, s: &PicardSettings) -> Result<(SpaceTimeField, IterationReport)> {
    if s.n_t < 2 || !(s.t_end >= 0.0) || s.max_iter == 0 {
        return Err(Error::Validation(vec![format!("picard needs n_t >= 2, t_end >= 0, max_iter >= 1 (got {s:?})")]));
    }
    let disc = &problem.disc;
    let data = &problem.data;
    let weight = problem.weight;
    let n = disc.n_z1();
    let cols = s.n_t + 1;
    let dt = s.t_end / s.n_t as f64;
    let times: Vec<f64> = (0..cols).map(|j| j as f64 * dt).collect();
    let sup = SupNormOmega::new(data, disc);
    let gap_cols: Vec<usize> = (0..cols).step_by(s.n_t.div_ceil(GAP_TIME_SAMPLES).max(1)).collect();
    let n_z2 = disc.n_u();

    let mut phi = SpaceTimeField::zeros(n, cols);
    let mut older: Option<Iterate> = None;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut w = vec![0.0; n];
    let mut om = vec![0.0; n];
    let mut status = PicardStatus::MaxIter;

    for iter in 1..=s.max_iter {
        let mem = memory_from_phase(&phi, dt);
        let mut omega_big = SpaceTimeField::zeros(n, cols);
        for j in 0..cols {
            disc.inner_profile_w(phi.column(j), mem.column(j), weight, &mut w)?;
            omega_profile(&w, disc.grid.h, weight, &mut om);
            omega_big.column_mut(j).copy_from_slice(&om);
        }
        let next = cumulative_trapezoid(&omega_big, dt, |o| 2.0 * o);

        let prev_rec = records.last();
        let mut m = Vec::with_capacity(cols);
        let mut l = Vec::with_capacity(cols);
        let mut gamma = Vec::with_capacity(cols);
        let (mut rm, mut rl, mut rg) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..cols {
            rm = rm.max(sup.eval(mem.column(j)));
            rl = rl.max(next.column(j).iter().fold(0.0f64, |a, v| a.max(v.abs())));
            rg = rg.max(omega_big.column(j).iter().fold(0.0f64, |a, v| a.max(v.abs())));
            let (pm, pl, pg) = prev_rec.map_or((0.0, 0.0, 0.0), |r| (r.m[j], r.l[j], r.gamma[j]));
            m.push(rm.max(pm));
            l.push(rl.max(pl));
            gamma.push(rg.max(pg));
        }

        let phi_gap = next.values.iter().zip(&phi.values).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let omega_gap = match &older {
            Some(o) => {
                let (a, b) = sample_pair(problem, &gap_cols, n_z2, (&phi, &mem), (&o.phi_prev, &o.mem));
                iterate_gap(&a, &b)?[0]
            }
            None => {
                // The iterate before the first is the untransported, unforced data.
                let zero = SpaceTimeField::zeros(n, cols);
                let (a, b) = sample_pair(problem, &gap_cols, n_z2, (&phi, &mem), (&zero, &zero));
                iterate_gap(&a, &b)?[0]
            }
        };
        let diverged = !m[cols - 1].is_finite() || m[cols - 1] > s.ceiling || !phi_gap.is_finite();
        records.push(IterationRecord { m, l, gamma, omega_gap, phi_gap });
        older = Some(Iterate { phi_prev: std::mem::replace(&mut phi, next), mem });
        if diverged {
            log::warn!("picard iteration diverged at iterate {iter}");
            status = PicardStatus::Diverged;
            break;
        }
        if phi_gap <= s.gap_tol {
            status = PicardStatus::Converged;
            break;
        }
    }
    let iterations_used = records.len();
    Ok((phi, IterationReport { times, iterations: records, status, iterations_used, truncated_gap: true }))
}

/// Vorticity of two iterates at shared points: on line `i` at time column `j`, `n_z2`
/// points spanning the union of both transported supports.
fn sample_pair(
    problem: &Problem,
    gap_cols: &[usize],
    n_z2: usize,
    a: (&SpaceTimeField, &SpaceTimeField),
    b: (&SpaceTimeField, &SpaceTimeField),
) -> (SpaceTimeField, SpaceTimeField) {
    let disc = &problem.disc;
    let data = &problem.data;
    let n = disc.n_z1();
    let mut fa = SpaceTimeField::zeros(n, gap_cols.len() * n_z2);
    let mut fb = fa.clone();
    let omega = |z1: f64, z2: f64, phi: f64, mem: f64| {
        let u = z2 - phi;
        data.eval_z(FieldKind::Omega0, z1, u) + data.eval_z(FieldKind::F1, z1, u) * mem
    };
    for (c, &j) in gap_cols.iter().enumerate() {
        for i in 0..n {
            let Some((lo, hi)) = disc.intervals[i] else { continue };
            let z1 = disc.grid.nodes[i];
            let (pa, ma) = (a.0.at(i, j), a.1.at(i, j));
            let (pb, mb) = (b.0.at(i, j), b.1.at(i, j));
            let (s0, s1) = (lo + pa.min(pb), hi + pa.max(pb));
            for k in 0..n_z2 {
                let z2 = s0 + (s1 - s0) * k as f64 / (n_z2 - 1) as f64;
                let col = c * n_z2 + k;
                fa.values[col * n + i] = omega(z1, z2, pa, ma);
                fb.values[col * n + i] = omega(z1, z2, pb, mb);
            }
        }
    }
    (fa, fb)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AprioriChecks {
    /// `L_n(t) <= 2 int_0^t Gamma_n` within the time-grid error, for every `n` and `t`.
    pub phase_bound_ok: bool,
    /// Largest `L_n(t) - 2 int Gamma_n` minus its tolerance (nonpositive when passing).
    pub phase_bound_margin: f64,
    /// Fitted `C_n = max_t Gamma_n / ((1 + L_{n-1}) M_n)`, absent when `M_n = 0`.
    pub c_fits: Vec<Option<f64>>,
    /// Relative spread of the last three fitted constants.
    pub c_spread: Option<f64>,
    pub c_stable: bool,
    /// `M_n` and `L_n` never decrease in `n`.
    pub monotone_suprema: bool,
}

/// Numerical check of the a-priori bounds behind the iteration.
pub fn apriori_monitor(report: &IterationReport) -> AprioriChecks {
    let times = &report.times;
    let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    let mut ok = true;
    let mut margin = f64::NEG_INFINITY;
    let mut c_fits = Vec::with_capacity(report.iterations.len());
    for (n, rec) in report.iterations.iter().enumerate() {
        let (mut fine, mut coarse) = (0.0, 0.0);
        for j in 0..times.len() {
            if j > 0 {
                fine += 0.5 * dt * (rec.gamma[j] + rec.gamma[j - 1]);
            }
            if j >= 2 && j % 2 == 0 {
                coarse += dt * (rec.gamma[j] + rec.gamma[j - 2]);
            }
            let bound = 2.0 * fine;
            // Richardson estimate of the trapezoid error, from the half-resolution sum.
            let tol = if j % 2 == 0 { 2.0 * (fine - coarse).abs() / 3.0 } else { 0.0 } + 1e-12 * (1.0 + bound);
            let gap = rec.l[j] - bound - tol;
            margin = margin.max(gap);
            if gap > 0.0 {
                ok = false;
            }
        }
        let l_prev = if n == 0 { None } else { Some(&report.iterations[n - 1].l) };
        let mut c: Option<f64> = None;
        for j in 0..times.len() {
            if rec.m[j] > 0.0 {
                let lp = l_prev.map_or(0.0, |l| l[j]);
                let v = rec.gamma[j] / ((1.0 + lp) * rec.m[j]);
                c = Some(c.map_or(v, |a: f64| a.max(v)));
            }
        }
        c_fits.push(c);
    }
    let tail: Vec<f64> = c_fits.iter().rev().take(3).filter_map(|c| *c).collect();
    let c_spread = (tail.len() == 3 || (tail.len() == c_fits.len() && !tail.is_empty())).then(|| {
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        if hi > 0.0 {
            (hi - lo) / hi
        } else {
            0.0
        }
    });
    let all_zero = c_fits.iter().all(|c| c.is_none());
    let monotone = report.iterations.windows(2).all(|w| {
        w[1].m.iter().zip(&w[0].m).all(|(a, b)| a >= b) && w[1].l.iter().zip(&w[0].l).all(|(a, b)| a >= b)
    });
    AprioriChecks {
        phase_bound_ok: ok,
        phase_bound_margin: if margin.is_finite() { margin } else { 0.0 },
        c_stable: all_zero || c_spread.is_some_and(|s| s <= 0.2),
        c_fits,
        c_spread,
        monotone_suprema: monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Scenario, ScenarioConfig};

    fn problem(scenario: Scenario) -> Problem {
        let mut c = ScenarioConfig::default_for(scenario);
        c.grid.n_z1 = 257;
        c.grid.n_u = 33;
        c.grid.z_min = -20.0;
        Problem::new(&c).unwrap()
    }

    fn settings(t_end: f64) -> PicardSettings {
        PicardSettings { t_end, n_t: 64, max_iter: 30, gap_tol: 1e-11, ceiling: 1e6 }
    }

    #[test]
    fn zero_data_converges_at_once() {
        let mut c = ScenarioConfig::default_for(Scenario::Custom);
        c.grid.n_z1 = 65;
        c.grid.n_u = 9;
        c.data.rho0.amplitude = 0.0;
        let p = Problem::new(&c).unwrap();
        let (phi, rep) = picard_solve(&p, &settings(0.5)).unwrap();
        assert!(rep.converged());
        assert_eq!(rep.iterations_used, 1);
        assert_eq!(phi.sup_abs(), 0.0);
        let chk = apriori_monitor(&rep);
        assert!(chk.phase_bound_ok && chk.c_stable && chk.monotone_suprema);
        assert_eq!(chk.c_fits, vec![None]);
    }

    #[test]
    fn memory_of_zero_phase_is_time() {
        let phi = SpaceTimeField::zeros(5, 11);
        let mem = memory_from_phase(&phi, 0.1);
        for j in 0..11 {
            assert!(mem.column(j).iter().all(|&m| (m - 0.1 * j as f64).abs() < 1e-15));
        }
    }

    #[test]
    fn gap_is_a_running_sup_from_the_right() {
        let a = SpaceTimeField::zeros(6, 3);
        assert_eq!(iterate_gap(&a, &a).unwrap(), vec![0.0; 6]);
        let mut b = a.clone();
        b.values[2 * 6 + 3] = -0.25;
        assert_eq!(iterate_gap(&a, &b).unwrap(), vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0]);
        let c = SpaceTimeField::zeros(5, 3);
        assert!(matches!(iterate_gap(&a, &c), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn boussinesq_short_window_converges_with_shrinking_gaps() {
        let p = problem(Scenario::Boussinesq);
        let (_, rep) = picard_solve(&p, &settings(0.5)).unwrap();
        assert!(rep.converged(), "{:?}", rep.status);
        let g: Vec<f64> = rep.iterations.iter().map(|r| r.omega_gap).filter(|&g| g > 1e-9).collect();
        assert!(g.len() >= 3);
        for w in g.windows(3) {
            assert!(w[2] / w[1] <= w[1] / w[0] * 1.05, "{g:?}");
        }
        let chk = apriori_monitor(&rep);
        assert!(chk.phase_bound_ok, "{chk:?}");
        assert!(chk.monotone_suprema);
        assert!(chk.c_stable, "{chk:?}");
    }

    #[test]
    fn first_iterate_uses_linear_memory() {
        let p = problem(Scenario::Boussinesq);
        let mut s = settings(0.5);
        s.max_iter = 1;
        let (phi, rep) = picard_solve(&p, &s).unwrap();
        assert_eq!(rep.status, PicardStatus::MaxIter);
        // phi_1 = 2 int_0^t Omega[omega0 + f1 s] ds, and Omega is linear in the memory.
        let zeros = vec![0.0; p.disc.n_z1()];
        let ones = vec![1.0; p.disc.n_z1()];
        let mut w = vec![0.0; zeros.len()];
        let mut om = vec![0.0; zeros.len()];
        p.disc.inner_profile_w(&zeros, &ones, p.weight, &mut w).unwrap();
        omega_profile(&w, p.disc.grid.h, p.weight, &mut om);
        let t = 0.5;
        for i in 0..zeros.len() {
            assert!((phi.at(i, 64) - om[i] * t * t).abs() <= 1e-12 * (1.0 + om[i]));
        }
    }

    #[test]
    fn long_window_is_reported_not_thrown() {
        let p = problem(Scenario::Boussinesq);
        let mut s = settings(10.0);
        s.max_iter = 12;
        s.ceiling = 1e3;
        let (_, rep) = picard_solve(&p, &s).unwrap();
        assert_ne!(rep.status, PicardStatus::Converged);
    }
}
