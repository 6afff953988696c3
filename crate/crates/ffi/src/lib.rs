//! C interface to the `hypbsq` solver.
//!
//! Configurations and finished runs are opaque handles created and released by the
//! functions below. Every fallible call returns a [`HypbsqStatus`]; on failure the
//! message is available from [`hypbsq_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hypbsq::config::{Scenario, ScenarioConfig};
use hypbsq::coords::{x_to_z, PointX};
use hypbsq::evolver::{estimate_blowup_time, RunResult, StopReason};
use hypbsq::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypbsqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Parse = 4,
    Domain = 5,
    Runtime = 6,
    NotBlowUp = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypbsqStopReason {
    TimeReached = 0,
    PhiThreshold = 1,
    StepCollapse = 2,
    FrontHitLeftEdge = 3,
}

/// One diagnostics sample. Optional values are NaN when their flag is 0.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HypbsqSeriesRow {
    pub t: f64,
    pub phi_left: f64,
    pub sup_omega: f64,
    pub bkm: f64,
    pub f1: f64,
    pub f2: f64,
    pub delta: f64,
    pub gamma_est: f64,
    pub tail_bound: f64,
    pub has_f1: u8,
    pub has_f2: u8,
    pub has_gamma_est: u8,
}

/// Opaque scenario configuration.
pub struct HypbsqConfig {
    inner: ScenarioConfig,
}

/// Opaque finished run.
pub struct HypbsqRun {
    inner: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(e: &Error) -> HypbsqStatus {
    match e {
        Error::Validation(_) => HypbsqStatus::Validation,
        Error::Parse { .. } => HypbsqStatus::Parse,
        Error::Domain { .. } | Error::Range(_) => HypbsqStatus::Domain,
        Error::NotBlowUp(_) => HypbsqStatus::NotBlowUp,
        _ => HypbsqStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HypbsqStatus>) -> HypbsqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HypbsqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            HypbsqStatus::Panic
        }
    }
}

fn fail(e: Error) -> HypbsqStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, HypbsqStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is null"));
        return Err(HypbsqStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        HypbsqStatus::InvalidUtf8
    })
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), HypbsqStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is null"));
        Err(HypbsqStatus::NullArgument)
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread. Valid until the next call.
#[no_mangle]
pub extern "C" fn hypbsq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default configuration for `scenario` ("euler", "boussinesq" or "custom").
///
/// # Safety
/// `scenario` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_config_default(scenario: *const c_char, out: *mut *mut HypbsqConfig) -> HypbsqStatus {
    guard(|| {
        non_null(out, "out")?;
        let name = str_arg(scenario, "scenario")?;
        let s: Scenario = name.parse().map_err(|m: String| {
            set_error(m);
            HypbsqStatus::Validation
        })?;
        *out = Box::into_raw(Box::new(HypbsqConfig { inner: ScenarioConfig::default_for(s) }));
        Ok(())
    })
}

/// Parse key=value config text (a run manifest also works).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_config_parse(text: *const c_char, out: *mut *mut HypbsqConfig) -> HypbsqStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = str_arg(text, "text")?;
        let cfg = ScenarioConfig::parse(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(HypbsqConfig { inner: cfg }));
        Ok(())
    })
}

/// Set one config key.
///
/// # Safety
/// `config` must come from this library; `key` and `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_config_set(config: *mut HypbsqConfig, key: *const c_char, value: *const c_char) -> HypbsqStatus {
    guard(|| {
        non_null(config, "config")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        (*config).inner.set(key, value).map_err(|m| {
            set_error(m);
            HypbsqStatus::Parse
        })
    })
}

/// Check the config invariants without running.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_config_validate(config: *const HypbsqConfig) -> HypbsqStatus {
    guard(|| {
        non_null(config, "config")?;
        (*config).inner.validate().map_err(fail)
    })
}

/// Serialize the config; release the string with [`hypbsq_string_free`].
///
/// # Safety
/// `config` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_config_to_string(config: *const HypbsqConfig, out: *mut *mut c_char) -> HypbsqStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let s = CString::new((*config).inner.to_kv_string()).map_err(|_| HypbsqStatus::Runtime)?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `config` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_config_free(config: *mut HypbsqConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Integrate the scenario. Blow-up is a normal outcome, reported by [`hypbsq_run_status`].
///
/// # Safety
/// `config` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_run(config: *const HypbsqConfig, out: *mut *mut HypbsqRun) -> HypbsqStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let r = hypbsq::run(&(*config).inner).map_err(fail)?;
        *out = Box::into_raw(Box::new(HypbsqRun { inner: r }));
        Ok(())
    })
}

/// Stop reason and stop time of a finished run.
///
/// # Safety
/// `run` must come from this library; `reason` and `t` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_run_status(run: *const HypbsqRun, reason: *mut HypbsqStopReason, t: *mut f64) -> HypbsqStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(reason, "reason")?;
        non_null(t, "t")?;
        let st = (*run).inner.status;
        *reason = match st.reason {
            StopReason::TimeReached => HypbsqStopReason::TimeReached,
            StopReason::PhiThreshold => HypbsqStopReason::PhiThreshold,
            StopReason::StepCollapse => HypbsqStopReason::StepCollapse,
            StopReason::FrontHitLeftEdge => HypbsqStopReason::FrontHitLeftEdge,
        };
        *t = st.t;
        Ok(())
    })
}

/// Number of recorded samples; 0 for a null handle.
///
/// # Safety
/// `run` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_run_series_len(run: *const HypbsqRun) -> usize {
    if run.is_null() {
        0
    } else {
        (*run).inner.series.len()
    }
}

/// Copy sample `index` into `out`.
///
/// # Safety
/// `run` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_run_series_row(run: *const HypbsqRun, index: usize, out: *mut HypbsqSeriesRow) -> HypbsqStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        let rows = &(*run).inner.series.rows;
        let Some(r) = rows.get(index) else {
            set_error(format!("sample {index} out of range (len {})", rows.len()));
            return Err(HypbsqStatus::OutOfRange);
        };
        let split = |v: Option<f64>| (v.unwrap_or(f64::NAN), v.is_some() as u8);
        let (f1, has_f1) = split(r.f1);
        let (f2, has_f2) = split(r.f2);
        let (gamma_est, has_gamma_est) = split(r.gamma_est);
        *out = HypbsqSeriesRow {
            t: r.t,
            phi_left: r.phi_left,
            sup_omega: r.sup_omega,
            bkm: r.bkm,
            f1,
            f2,
            delta: r.delta,
            gamma_est,
            tail_bound: r.tail_bound,
            has_f1,
            has_f2,
            has_gamma_est,
        };
        Ok(())
    })
}

/// Blow-up time estimate; fails with `NotBlowUp` for runs that reached their end time.
///
/// # Safety
/// `run` must come from this library; `tb` and `uncertainty` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_run_blowup_time(run: *const HypbsqRun, tb: *mut f64, uncertainty: *mut f64) -> HypbsqStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(tb, "tb")?;
        non_null(uncertainty, "uncertainty")?;
        let r = &(*run).inner;
        let est = estimate_blowup_time(&r.series, &r.status).map_err(fail)?;
        *tb = est.tb;
        *uncertainty = est.uncertainty;
        Ok(())
    })
}

/// # Safety
/// `run` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_run_free(run: *mut HypbsqRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// `(x1, x2) -> (z1, z2)`; fails with `Domain` unless both inputs are positive.
///
/// # Safety
/// `z1` and `z2` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hypbsq_x_to_z(x1: f64, x2: f64, z1: *mut f64, z2: *mut f64) -> HypbsqStatus {
    guard(|| {
        non_null(z1, "z1")?;
        non_null(z2, "z2")?;
        let z = x_to_z(PointX::new(x1, x2)).map_err(fail)?;
        *z1 = z.z1;
        *z2 = z.z2;
        Ok(())
    })
}
