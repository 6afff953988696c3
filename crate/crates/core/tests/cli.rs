use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hypbsq::output::{manifest_results, parse_series_csv, SERIES_HEADER, SNAPSHOT_HEADER};

const SMALL: &[&str] = &[
    "grid.n_z1=129",
    "grid.n_u=17",
    "grid.z_min=-15",
    "T=0.5",
    "sampling.dt=0.1",
    "sampling.every_step=false",
    "output.snapshot_times=0,0.5",
];

fn hypbsq(args: &[&str], sets: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hypbsq"));
    cmd.args(args);
    for s in sets {
        cmd.arg("--set").arg(s);
    }
    cmd.output().expect("spawn hypbsq")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn run_small(out: &Path) -> Output {
    hypbsq(&["run", "--scenario", "boussinesq", "--out", out.to_str().unwrap()], SMALL)
}

#[test]
fn run_writes_series_snapshots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_small(dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("status=time_reached"));

    let series = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some(SERIES_HEADER));
    let parsed = parse_series_csv(&series).unwrap();
    assert_eq!(parsed.times(), vec![0.0, 0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);

    for k in 0..2 {
        let snap = fs::read_to_string(dir.path().join(format!("snapshot_{k:04}.csv"))).unwrap();
        assert_eq!(snap.lines().next(), Some(SNAPSHOT_HEADER));
        assert!(snap.lines().count() > 1);
    }

    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    let results = manifest_results(&manifest);
    let get = |k: &str| results.iter().find(|(a, _)| a == k).map(|(_, v)| v.clone());
    assert_eq!(get("status").as_deref(), Some("time_reached"));
    assert_eq!(get("samples").as_deref(), Some("6"));
    assert_eq!(get("monotonicity.omega_z1").as_deref(), Some("0"));
    assert!(get("blowup.tb").is_none());
}

#[test]
fn manifest_reproduces_the_series_bit_for_bit() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_small(a.path())), 0);
    let manifest = a.path().join("manifest.txt");
    let o = hypbsq(&["run", "--config", manifest.to_str().unwrap(), "--out", b.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sa = fs::read(a.path().join("series.csv")).unwrap();
    let sb = fs::read(b.path().join("series.csv")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hypbsq(&["run", "--scenario", "euler", "--out", out], &["data.rho0.amplitude=1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert!(!dir.path().join("series.csv").exists());

    let o = hypbsq(&["run", "--scenario", "boussinesq", "--out", out], &["grid.bogus=1"]);
    assert_eq!(code(&o), 2);

    let o = hypbsq(&["run", "--scenario", "boussinesq", "--out", out], &["grid.n_u=16"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = run_small(&blocker.join("sub"));
    assert_eq!(code(&o), 3);
}

#[test]
fn refine_verb_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypbsq(&["refine", "--scenario", "boussinesq", "--levels", "1,2", "--out", dir.path().to_str().unwrap()], SMALL);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("refine.csv")).unwrap();
    assert!(table.starts_with("factor,status,t_stop,tb,tb_method,tb_uncertainty\n1,time_reached,"));
    let pair = table.lines().find(|l| l.starts_with("1,2,")).expect("pair row");
    let diff: f64 = pair.rsplit(',').next().unwrap().parse().unwrap();
    assert!(diff < 1e-3, "{diff}");

    let o = hypbsq(&["refine", "--scenario", "boussinesq", "--levels", "2", "--out", dir.path().to_str().unwrap()], SMALL);
    assert_eq!(code(&o), 2);
}

#[test]
fn picard_verb_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let mut sets = SMALL.to_vec();
    sets.push("picard.n_t=64");
    let o = hypbsq(&["picard-validate", "--scenario", "boussinesq", "--t-window", "0.25", "--out", dir.path().to_str().unwrap()], &sets);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let kv = fs::read_to_string(dir.path().join("picard.txt")).unwrap();
    assert!(kv.contains("picard.status=converged"), "{kv}");
    let d: f64 = kv.lines().find_map(|l| l.strip_prefix("picard.discrepancy=")).unwrap().parse().unwrap();
    assert!(d < 1e-5, "{d}");
    let iters = fs::read_to_string(dir.path().join("picard_iterations.csv")).unwrap();
    assert!(iters.starts_with("iteration,M,L,Gamma,omega_gap,phi_gap,C_fit\n1,"));
}
