//! C ABI over the `twoqubit` simulator.
//!
//! Objects cross the boundary as opaque handles created by `tq_*_new` /
//! `tq_*_run` and released by the matching `tq_*_free`. Every fallible call
//! returns a [`TqStatus`]; on failure a message is available from
//! [`tq_last_error`] on the same thread until the next failing call.
//!
//! The header `include/twoqubit.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twoqubit::evolution::Propagator;
use twoqubit::observables::{LifetimeFit, ObservableRecord};
use twoqubit::reduced::plateau_decay_rate;
use twoqubit::scenario::{self, parse_config_with_overrides, Preset, ScenarioConfig};
use twoqubit::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Numerical = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqPropagator {
    Spectral = 0,
    Rk = 1,
    Expm = 2,
}

impl From<Propagator> for TqPropagator {
    fn from(p: Propagator) -> Self {
        match p {
            Propagator::Spectral => TqPropagator::Spectral,
            Propagator::Rk => TqPropagator::Rk,
            Propagator::Expm => TqPropagator::Expm,
        }
    }
}

/// One sample of a trajectory. Populations are in the eigenbasis
/// `{ee, +, −, gg}`; entropy is in nats.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TqRecord {
    pub t: f64,
    pub p_ee: f64,
    pub p_s: f64,
    pub p_as: f64,
    pub p_gg: f64,
    pub entropy: f64,
    pub concurrence: f64,
    pub trace_err: f64,
    pub min_eig: f64,
}

impl From<&ObservableRecord> for TqRecord {
    fn from(r: &ObservableRecord) -> Self {
        TqRecord {
            t: r.t,
            p_ee: r.p_ee,
            p_s: r.p_s,
            p_as: r.p_as,
            p_gg: r.p_gg,
            entropy: r.entropy,
            concurrence: r.concurrence,
            trace_err: r.trace_err,
            min_eig: r.min_eig,
        }
    }
}

/// Scenario configuration: a preset, optional config text and overrides.
pub struct TqScenario {
    text: String,
    preset: Option<Preset>,
    overrides: Vec<String>,
    config: ScenarioConfig,
}

/// Observables of a finished propagation.
pub struct TqTrajectory {
    records: Vec<TqRecord>,
    method: Propagator,
    lifetime: Option<LifetimeFit>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config { .. } => TqStatus::Config,
            Error::Io(_) | Error::Json(_) => TqStatus::Io,
            e if e.is_numerical() => TqStatus::Numerical,
            _ => TqStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TqStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TqStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

impl TqScenario {
    fn resolve(text: &str, preset: Option<Preset>, overrides: &[String]) -> Result<ScenarioConfig, Failure> {
        Ok(parse_config_with_overrides(text, preset, overrides)?)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a scenario from a preset name (`main`, `one_reservoir`, `dicke`,
/// `local`, `detuning_sweep`, `custom`); NULL selects `main`.
///
/// # Safety
/// `preset` must be NULL or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_new(preset: *const c_char, out: *mut *mut TqScenario) -> TqStatus {
    guard(|| {
        let preset = if preset.is_null() {
            Preset::Main
        } else {
            read_str(preset, "preset")?
                .parse::<Preset>()
                .map_err(|m| Failure(TqStatus::InvalidArgument, m))?
        };
        let config = TqScenario::resolve("", Some(preset), &[])?;
        let handle = Box::new(TqScenario {
            text: String::new(),
            preset: Some(preset),
            overrides: Vec::new(),
            config,
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// Creates a scenario from config-file text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_from_config(text: *const c_char, out: *mut *mut TqScenario) -> TqStatus {
    guard(|| {
        let text = read_str(text, "text")?.to_owned();
        let config = TqScenario::resolve(&text, None, &[])?;
        let handle = Box::new(TqScenario {
            text,
            preset: None,
            overrides: Vec::new(),
            config,
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// Applies a `key = value` override (e.g. `"params.coupling"`, `"0.2"`).
/// On failure the scenario is left unchanged.
///
/// # Safety
/// `scenario` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_set(
    scenario: *mut TqScenario,
    key: *const c_char,
    value: *const c_char,
) -> TqStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let key = read_str(key, "key")?;
        let value = read_str(value, "value")?;
        let mut overrides = s.overrides.clone();
        overrides.push(format!("{key}={value}"));
        s.config = TqScenario::resolve(&s.text, s.preset, &overrides)?;
        s.overrides = overrides;
        Ok(())
    })
}

/// Reads a resolved numeric setting: a physical parameter (`omega1`,
/// `omega2`, `coupling`, `gamma_dp1`, `gamma_dp2`, `gamma_rad`, `temp_dp`,
/// `temp_rad`) or a grid bound (`t_min`, `t_max`).
///
/// # Safety
/// `scenario` must come from this library; `key` must be a NUL-terminated
/// string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_get(scenario: *const TqScenario, key: *const c_char, out: *mut f64) -> TqStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let c = &s.config;
        let p = &c.params;
        let value = match read_str(key, "key")? {
            "omega1" => p.omega1,
            "omega2" => p.omega2,
            "coupling" => p.coupling,
            "gamma_dp1" => p.gamma_dp1,
            "gamma_dp2" => p.gamma_dp2,
            "gamma_rad" => p.gamma_rad,
            "temp_dp" => p.temp_dp,
            "temp_rad" => p.temp_rad,
            "t_min" => c.grid.t_min,
            "t_max" => c.grid.t_max,
            other => return Err(Failure(TqStatus::InvalidArgument, format!("unknown key `{other}`"))),
        };
        write_out(out, value, "out")
    })
}

/// Closed-form decay rate of the entangled plateau for the scenario's
/// parameters.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_plateau_rate(scenario: *const TqScenario, out: *mut f64) -> TqStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        write_out(out, plateau_decay_rate(&s.config.params), "out")
    })
}

/// Propagates the scenario. With `write_files` non-zero the trajectory,
/// plot data and manifest are also written to the scenario's output
/// directory.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_run(
    scenario: *const TqScenario,
    write_files: i32,
    out: *mut *mut TqTrajectory,
) -> TqStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let run = if write_files != 0 {
            scenario::run_scenario(&s.config)?.run
        } else {
            scenario::simulate(&s.config)?
        };
        let handle = Box::new(TqTrajectory {
            records: run.records.iter().map(TqRecord::from).collect(),
            method: run.trajectory.method,
            lifetime: run.fit_lifetime().ok(),
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// Releases a scenario; NULL is ignored.
///
/// # Safety
/// `scenario` must be NULL or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tq_scenario_free(scenario: *mut TqScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of samples; 0 for NULL.
///
/// # Safety
/// `trajectory` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tq_trajectory_len(trajectory: *const TqTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.records.len())
}

/// Copies sample `index` into `out`.
///
/// # Safety
/// `trajectory` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_trajectory_record(
    trajectory: *const TqTrajectory,
    index: usize,
    out: *mut TqRecord,
) -> TqStatus {
    guard(|| {
        let t = trajectory.as_ref().ok_or_else(|| null("trajectory"))?;
        let r = t.records.get(index).ok_or_else(|| {
            Failure(
                TqStatus::OutOfRange,
                format!("index {index} out of range for {} samples", t.records.len()),
            )
        })?;
        write_out(out, *r, "out")
    })
}

/// Propagator that actually produced the samples (spectral may fall back to
/// expm).
///
/// # Safety
/// `trajectory` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tq_trajectory_method(trajectory: *const TqTrajectory, out: *mut TqPropagator) -> TqStatus {
    guard(|| {
        let t = trajectory.as_ref().ok_or_else(|| null("trajectory"))?;
        write_out(out, t.method.into(), "out")
    })
}

/// Fitted decay rate of the antisymmetric population and its R².
/// Returns `TQ_STATUS_NUMERICAL` when the grid does not resolve the decay.
///
/// # Safety
/// `trajectory` must come from this library; `rate` and `r_squared` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tq_trajectory_lifetime(
    trajectory: *const TqTrajectory,
    rate: *mut f64,
    r_squared: *mut f64,
) -> TqStatus {
    guard(|| {
        let t = trajectory.as_ref().ok_or_else(|| null("trajectory"))?;
        let fit = t
            .lifetime
            .ok_or_else(|| Failure(TqStatus::Numerical, "no lifetime fit for this trajectory".into()))?;
        if rate.is_null() || r_squared.is_null() {
            return Err(null("rate or r_squared"));
        }
        rate.write(fit.rate);
        r_squared.write(fit.r_squared);
        Ok(())
    })
}

/// Releases a trajectory; NULL is ignored.
///
/// # Safety
/// `trajectory` must be NULL or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tq_trajectory_free(trajectory: *mut TqTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}
