//! The three batch operations behind the command-line verbs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{fmt_f64, Problem, ScenarioConfig};
use crate::error::{Error, Result};
use crate::evolver::{estimate_blowup_time, run_problem, BlowupEstimate, RunResult, StopStatus};
use crate::output::{write_run, RunOutputs};
use crate::picard::{apriori_monitor, picard_solve, AprioriChecks, IterationReport, PicardSettings, PicardStatus};

pub fn run_scenario(config: &ScenarioConfig, out: &Path) -> Result<(RunResult, RunOutputs)> {
    let problem = Problem::new(config)?;
    let result = run_problem(&problem)?;
    let outputs = write_run(out, config, &result, &problem.disc.grid, &problem.data)?;
    Ok((result, outputs))
}

#[derive(Clone, Debug)]
pub struct RefineLevel {
    pub factor: u32,
    pub outcome: std::result::Result<StopStatus, String>,
    pub blowup: Option<BlowupEstimate>,
    pub phi_left: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinePair {
    pub a: u32,
    pub b: u32,
    pub common_samples: usize,
    /// Sup of `|phi_left_a - phi_left_b|` over shared sample times in the window.
    pub phi_left_diff: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RefineTable {
    pub levels: Vec<RefineLevel>,
    pub pairs: Vec<RefinePair>,
}

impl RefineTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("factor,status,t_stop,tb,tb_method,tb_uncertainty\n");
        for l in &self.levels {
            let (status, t) = match &l.outcome {
                Ok(st) => (st.reason.name().to_string(), fmt_f64(st.t)),
                Err(e) => (format!("error: {}", e.replace(',', ";")), String::new()),
            };
            let (tb, m, u) = l
                .blowup
                .map(|b| (fmt_f64(b.tb), b.method.name().to_string(), fmt_f64(b.uncertainty)))
                .unwrap_or_default();
            let _ = writeln!(s, "{},{status},{t},{tb},{m},{u}", l.factor);
        }
        s.push_str("\nlevel_a,level_b,common_samples,phi_left_sup_diff\n");
        for p in &self.pairs {
            let _ = writeln!(s, "{},{},{},{}", p.a, p.b, p.common_samples, p.phi_left_diff.map(fmt_f64).unwrap_or_default());
        }
        s
    }
}

/// Rerun at each refinement factor and compare `phi_left` on shared sample times
/// up to `window_end`.
pub fn refine_compare(config: &ScenarioConfig, levels: &[u32], window_end: Option<f64>) -> Result<RefineTable> {
    if levels.len() < 2 {
        return Err(Error::Validation(vec![format!("refinement needs at least 2 levels, got {}", levels.len())]));
    }
    config.validate()?;
    let end = window_end.unwrap_or(f64::INFINITY);
    let mut out = Vec::with_capacity(levels.len());
    for &factor in levels {
        let cfg = config.refined(factor);
        log::info!("refinement level {factor}: n_z1 = {}, n_u = {}", cfg.grid.n_z1, cfg.grid.n_u);
        let level = match Problem::new(&cfg).and_then(|p| run_problem(&p)) {
            Ok(r) => RefineLevel {
                factor,
                outcome: Ok(r.status),
                blowup: estimate_blowup_time(&r.series, &r.status).ok(),
                phi_left: r.series.rows.iter().filter(|row| row.t <= end).map(|row| (row.t, row.phi_left)).collect(),
            },
            Err(e) => RefineLevel { factor, outcome: Err(e.to_string()), blowup: None, phi_left: Vec::new() },
        };
        out.push(level);
    }
    let mut pairs = Vec::new();
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            let (a, b) = (&out[i], &out[j]);
            let mut common = 0;
            let mut diff: Option<f64> = None;
            let mut k = 0;
            for &(t, p) in &a.phi_left {
                while k < b.phi_left.len() && b.phi_left[k].0 < t {
                    k += 1;
                }
                if k < b.phi_left.len() && b.phi_left[k].0 == t {
                    common += 1;
                    let d = (p - b.phi_left[k].1).abs();
                    diff = Some(diff.map_or(d, |x| x.max(d)));
                }
            }
            pairs.push(RefinePair { a: a.factor, b: b.factor, common_samples: common, phi_left_diff: diff });
        }
    }
    Ok(RefineTable { levels: out, pairs })
}

#[derive(Clone, Debug)]
pub struct PicardValidation {
    pub t_window: f64,
    /// Sup of `|phi_picard - phi_evolver|` over shared times; absent when the
    /// iteration diverged.
    pub discrepancy: Option<f64>,
    pub compared_times: usize,
    pub evolver_status: StopStatus,
    pub report: IterationReport,
    pub checks: AprioriChecks,
}

impl PicardValidation {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("picard.t_window", fmt_f64(self.t_window));
        put("picard.status", self.report.status.name().into());
        put("picard.iterations_used", self.report.iterations_used.to_string());
        put("picard.discrepancy", self.discrepancy.map(fmt_f64).unwrap_or_default());
        put("picard.compared_times", self.compared_times.to_string());
        put("picard.truncated_gap", self.report.truncated_gap.to_string());
        put("evolver.status", self.evolver_status.reason.name().into());
        put("evolver.t_stop", fmt_f64(self.evolver_status.t));
        put("apriori.phase_bound_ok", self.checks.phase_bound_ok.to_string());
        put("apriori.phase_bound_margin", fmt_f64(self.checks.phase_bound_margin));
        put("apriori.c_spread", self.checks.c_spread.map(fmt_f64).unwrap_or_default());
        put("apriori.c_stable", self.checks.c_stable.to_string());
        put("apriori.monotone_suprema", self.checks.monotone_suprema.to_string());
        s
    }

    pub fn iterations_csv(&self) -> String {
        let mut s = String::from("iteration,M,L,Gamma,omega_gap,phi_gap,C_fit\n");
        for (n, r) in self.report.iterations.iter().enumerate() {
            let last = r.m.len() - 1;
            let c = self.checks.c_fits.get(n).copied().flatten().map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{c}",
                n + 1,
                fmt_f64(r.m[last]),
                fmt_f64(r.l[last]),
                fmt_f64(r.gamma[last]),
                fmt_f64(r.omega_gap),
                fmt_f64(r.phi_gap)
            );
        }
        s
    }
}

/// Solve on `[0, t_window]` with both methods and compare the phases on the
/// evolver's sample times, which are a subset of the Picard time grid.
pub fn picard_validate(config: &ScenarioConfig, t_window: f64) -> Result<PicardValidation> {
    let mut cfg = config.clone();
    cfg.integrator.t_end = t_window;
    let n_t = cfg.picard.n_t;
    let stride = if n_t.is_multiple_of(16) { n_t / 16 } else { 1 };
    cfg.sampling.dt = t_window * stride as f64 / n_t as f64;
    cfg.sampling.every_step = false;
    let problem = Problem::new(&cfg)?;
    let evo = run_problem(&problem)?;
    let (phi, report) = picard_solve(&problem, &PicardSettings::from_problem(&problem, t_window))?;
    let checks = apriori_monitor(&report);
    let mut compared = 0;
    let mut discrepancy = None;
    if report.status != PicardStatus::Diverged {
        let mut d = 0.0f64;
        for snap in &evo.history {
            let j = (snap.t / t_window * n_t as f64).round() as usize;
            if j > n_t || (report.times[j] - snap.t).abs() > 1e-12 * (1.0 + snap.t) {
                continue;
            }
            compared += 1;
            for (i, p) in snap.phi.iter().enumerate() {
                d = d.max((p - phi.at(i, j)).abs());
            }
        }
        discrepancy = Some(d);
    }
    Ok(PicardValidation { t_window, discrepancy, compared_times: compared, evolver_status: evo.status, report, checks })
}

pub fn write_refine(dir: &Path, table: &RefineTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("refine.csv"), table.to_csv())?;
    Ok(())
}

pub fn write_picard(dir: &Path, v: &PicardValidation) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("picard.txt"), v.to_kv())?;
    fs::write(dir.join("picard_iterations.csv"), v.iterations_csv())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::default_for(Scenario::Boussinesq);
        c.grid.n_z1 = 129;
        c.grid.n_u = 17;
        c.grid.z_min = -15.0;
        c.integrator.t_end = 0.5;
        c.sampling.every_step = false;
        c.sampling.dt = 0.1;
        c
    }

    #[test]
    fn identical_levels_have_zero_difference() {
        let t = refine_compare(&small(), &[1, 1], None).unwrap();
        assert_eq!(t.pairs.len(), 1);
        assert_eq!(t.pairs[0].phi_left_diff, Some(0.0));
        assert_eq!(t.pairs[0].common_samples, 6);
        assert!(t.to_csv().starts_with("factor,status"));
    }

    #[test]
    fn one_level_is_refused() {
        assert!(matches!(refine_compare(&small(), &[2], None), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_data_picard_agrees_exactly() {
        let mut c = small();
        c.scenario = Scenario::Custom;
        c.data.rho0.amplitude = 0.0;
        c.picard.n_t = 32;
        let v = picard_validate(&c, 0.5).unwrap();
        assert_eq!(v.discrepancy, Some(0.0));
        assert_eq!(v.compared_times, 17);
    }

    #[test]
    fn long_window_gives_a_report() {
        let mut c = small();
        c.picard.n_t = 32;
        c.picard.max_iter = 10;
        c.picard.ceiling = 1e3;
        let v = picard_validate(&c, 10.0).unwrap();
        assert_ne!(v.report.status, PicardStatus::Converged);
        assert!(v.to_kv().contains("picard.status="));
    }
}
