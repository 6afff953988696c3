//! Series tables, snapshot blocks and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{fmt_f64, ScenarioConfig};
use crate::diagnostics::{snapshot_block, DiagnosticsSeries, SeriesRow, Snapshot};
use crate::error::{Error, Result};
use crate::evolver::{estimate_blowup_time, RunResult};
use crate::fields::InitialData;
use crate::quadrature::Grid1D;

pub const SERIES_HEADER: &str = "t,phi_left,sup_omega,bkm,F1,F2,delta,gamma_est,tail_bound";
pub const SNAPSHOT_HEADER: &str = "z1,z2,omega,rho";

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn series_to_csv(series: &DiagnosticsSeries) -> String {
    let mut s = String::with_capacity(64 * (series.len() + 1));
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for r in &series.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.phi_left),
            fmt_f64(r.sup_omega),
            fmt_f64(r.bkm),
            opt(r.f1),
            opt(r.f2),
            fmt_f64(r.delta),
            opt(r.gamma_est),
            fmt_f64(r.tail_bound)
        );
    }
    s
}

/// Parse a series table. Columns not in the file come back as zero.
pub fn parse_series_csv(text: &str) -> Result<DiagnosticsSeries> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SERIES_HEADER => {}
        other => {
            return Err(Error::Parse { line: 1, message: format!("unexpected series header {:?}", other.map(|o| o.1)) })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse { line: idx + 1, message: format!("expected 9 fields, got {}", fields.len()) });
        }
        let num = |k: usize| -> Result<f64> {
            fields[k].parse().map_err(|_| Error::Parse { line: idx + 1, message: format!("bad number `{}`", fields[k]) })
        };
        let maybe = |k: usize| -> Result<Option<f64>> { if fields[k].is_empty() { Ok(None) } else { num(k).map(Some) } };
        rows.push(SeriesRow {
            t: num(0)?,
            phi_left: num(1)?,
            phi_sup: 0.0,
            omega_left: 0.0,
            sup_omega: num(2)?,
            bkm: num(3)?,
            f1: maybe(4)?,
            f2: maybe(5)?,
            delta: num(6)?,
            gamma_est: maybe(7)?,
            tail_bound: num(8)?,
        });
    }
    Ok(DiagnosticsSeries { rows })
}

pub fn snapshot_to_csv(grid: &Grid1D, snap: &Snapshot, data: &InitialData, stride: usize, n_z2: usize) -> String {
    let mut s = String::from(SNAPSHOT_HEADER);
    s.push('\n');
    for [a, b, c, d] in snapshot_block(grid, snap, data, stride, n_z2) {
        let _ = writeln!(s, "{},{},{},{}", fmt_f64(a), fmt_f64(b), fmt_f64(c), fmt_f64(d));
    }
    s
}

/// Config echo followed by `result.*` keys.
pub fn manifest_text(config: &ScenarioConfig, result: &RunResult, snapshots: &[(f64, String)]) -> String {
    let mut s = config.to_kv_string();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "result.{k}={v}");
    };
    let st = &result.status;
    put("status", st.reason.name().into());
    put("t_stop", fmt_f64(st.t));
    put("phi_left", fmt_f64(st.phi_left));
    put("F2", opt(st.f2));
    put("dt_last", fmt_f64(st.dt));
    put("steps", result.steps.to_string());
    put("rejected_steps", result.rejected.to_string());
    put("samples", result.series.len().to_string());
    if let Some(last) = result.series.rows.last() {
        put("bkm", fmt_f64(last.bkm));
        put("sup_omega", fmt_f64(last.sup_omega));
    }
    if let Ok(est) = estimate_blowup_time(&result.series, st) {
        put("blowup.tb", fmt_f64(est.tb));
        put("blowup.method", est.method.name().into());
        put("blowup.uncertainty", fmt_f64(est.uncertainty));
    }
    put("tail.max_bound", fmt_f64(result.tail.max_bound));
    put("tail.max_ratio", fmt_f64(result.tail.max_ratio));
    put("tail.warnings", result.tail.warnings.to_string());
    put("tail.first_warning_t", opt(result.tail.first_warning_t));
    let m = &result.monotonicity;
    put("monotonicity.checked_steps", m.checked_steps.to_string());
    put("monotonicity.omega_z1", m.omega_z1.to_string());
    put("monotonicity.phi_t", m.phi_t.to_string());
    put("monotonicity.mem_t", m.mem_t.to_string());
    put("monotonicity.f2_t", m.f2_t.to_string());
    put("monotonicity.dh_upper", m.dh_upper.to_string());
    for (k, (t, file)) in snapshots.iter().enumerate() {
        put(&format!("snapshot.{k}.t"), fmt_f64(*t));
        put(&format!("snapshot.{k}.file"), file.clone());
    }
    s
}

/// Read `result.*` entries of a manifest.
pub fn manifest_results(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix("result."))
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

#[derive(Clone, Debug)]
pub struct RunOutputs {
    pub dir: PathBuf,
    pub series: PathBuf,
    pub manifest: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

pub fn write_run(dir: &Path, config: &ScenarioConfig, result: &RunResult, grid: &Grid1D, data: &InitialData) -> Result<RunOutputs> {
    fs::create_dir_all(dir)?;
    let series = dir.join("series.csv");
    fs::write(&series, series_to_csv(&result.series))?;
    let mut snaps = Vec::new();
    let mut listed = Vec::new();
    for (k, &t) in config.output.snapshot_times.iter().enumerate() {
        let Some(snap) = result.history.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())) else {
            break;
        };
        let name = format!("snapshot_{k:04}.csv");
        let path = dir.join(&name);
        fs::write(&path, snapshot_to_csv(grid, snap, data, config.output.snapshot_z1_stride, config.output.snapshot_n_z2))?;
        listed.push((snap.t, name));
        snaps.push(path);
    }
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, manifest_text(config, result, &listed))?;
    Ok(RunOutputs { dir: dir.to_path_buf(), series, manifest, snapshots: snaps })
}
