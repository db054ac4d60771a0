use std::ffi::{CStr, CString};
use std::ptr;

use twoqubit_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = tq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(preset: &str) -> *mut TqScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { tq_scenario_new(c(preset).as_ptr(), &mut s) }, TqStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(tq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn main_preset_round_trip() {
    let s = scenario("main");
    let mut coupling = 0.0;
    assert_eq!(unsafe { tq_scenario_get(s, c("coupling").as_ptr(), &mut coupling) }, TqStatus::Ok);
    assert_eq!(coupling, 0.1);

    let mut rate = 0.0;
    assert_eq!(unsafe { tq_scenario_plateau_rate(s, &mut rate) }, TqStatus::Ok);
    assert!((rate - 1.746_151_144_711e-8).abs() < 1e-19);

    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { tq_scenario_run(s, 0, &mut traj) }, TqStatus::Ok);
    let n = unsafe { tq_trajectory_len(traj) };
    assert_eq!(n, 101);

    let mut rec = TqRecord::default();
    let mut best: f64 = 0.0;
    for i in 0..n {
        assert_eq!(unsafe { tq_trajectory_record(traj, i, &mut rec) }, TqStatus::Ok);
        best = best.max(rec.concurrence);
        assert!(rec.trace_err <= 1e-9);
    }
    assert!((0.93..=0.97).contains(&best), "{best}");
    assert_eq!(rec.t, 1e10);

    let mut method = TqPropagator::Rk;
    assert_eq!(unsafe { tq_trajectory_method(traj, &mut method) }, TqStatus::Ok);
    assert_eq!(method, TqPropagator::Spectral);

    let (mut fitted, mut r2) = (0.0, 0.0);
    assert_eq!(unsafe { tq_trajectory_lifetime(traj, &mut fitted, &mut r2) }, TqStatus::Ok);
    assert!((fitted / rate - 1.0).abs() < 0.1);
    assert!(r2 >= 0.999);

    assert_eq!(unsafe { tq_trajectory_record(traj, n, &mut rec) }, TqStatus::OutOfRange);
    assert!(last_error().contains("out of range"));

    unsafe {
        tq_trajectory_free(traj);
        tq_scenario_free(s);
    }
}

#[test]
fn overrides_and_errors() {
    let s = scenario("custom");
    assert_eq!(
        unsafe { tq_scenario_set(s, c("params.coupling").as_ptr(), c("0.2").as_ptr()) },
        TqStatus::Ok
    );
    let mut v = 0.0;
    unsafe { tq_scenario_get(s, c("coupling").as_ptr(), &mut v) };
    assert_eq!(v, 0.2);

    // A rejected override leaves the scenario untouched.
    assert_eq!(
        unsafe { tq_scenario_set(s, c("coupling").as_ptr(), c("strong").as_ptr()) },
        TqStatus::Config
    );
    assert!(last_error().contains("expects a number"));
    unsafe { tq_scenario_get(s, c("coupling").as_ptr(), &mut v) };
    assert_eq!(v, 0.2);

    assert_eq!(
        unsafe { tq_scenario_get(s, c("nope").as_ptr(), &mut v) },
        TqStatus::InvalidArgument
    );
    assert_eq!(unsafe { tq_scenario_get(ptr::null(), c("coupling").as_ptr(), &mut v) }, TqStatus::NullPointer);
    assert_eq!(unsafe { tq_scenario_get(s, ptr::null(), &mut v) }, TqStatus::NullPointer);
    unsafe { tq_scenario_free(s) };

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { tq_scenario_new(c("sideways").as_ptr(), &mut bad) }, TqStatus::InvalidArgument);
    assert!(bad.is_null());
    assert_eq!(unsafe { tq_scenario_new(ptr::null(), ptr::null_mut()) }, TqStatus::NullPointer);
    let invalid = [0xffu8, 0];
    assert_eq!(
        unsafe { tq_scenario_new(invalid.as_ptr().cast(), &mut bad) },
        TqStatus::InvalidUtf8
    );
}

#[test]
fn config_text_with_line_errors() {
    let mut s = ptr::null_mut();
    let text = c("preset = dicke\n[params]\ngamma_dp1 = 0.01\n");
    assert_eq!(unsafe { tq_scenario_from_config(text.as_ptr(), &mut s) }, TqStatus::Config);
    assert!(last_error().contains("line 3"), "{}", last_error());
    assert!(s.is_null());

    let text = c("preset = dicke\n[grid]\nt_max = 1e5\n");
    assert_eq!(unsafe { tq_scenario_from_config(text.as_ptr(), &mut s) }, TqStatus::Ok);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { tq_scenario_run(s, 0, &mut traj) }, TqStatus::Ok);
    let (mut rate, mut r2) = (0.0, 0.0);
    assert_eq!(unsafe { tq_trajectory_lifetime(traj, &mut rate, &mut r2) }, TqStatus::Numerical);
    unsafe {
        tq_trajectory_free(traj);
        tq_scenario_free(s);
        tq_trajectory_free(ptr::null_mut());
        tq_scenario_free(ptr::null_mut());
    }
    assert_eq!(unsafe { tq_trajectory_len(ptr::null()) }, 0);
}

#[test]
fn run_writes_files() {
    let dir = std::env::temp_dir().join(format!("twoqubit-ffi-{}", std::process::id()));
    let s = scenario("main");
    let dir_str = c(&dir.to_string_lossy());
    assert_eq!(unsafe { tq_scenario_set(s, c("output.dir").as_ptr(), dir_str.as_ptr()) }, TqStatus::Ok);
    assert_eq!(unsafe { tq_scenario_set(s, c("t_max").as_ptr(), c("1e6").as_ptr()) }, TqStatus::Ok);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { tq_scenario_run(s, 1, &mut traj) }, TqStatus::Ok);
    assert!(dir.join("trajectory.csv").is_file());
    assert!(dir.join("manifest.json").is_file());
    unsafe {
        tq_trajectory_free(traj);
        tq_scenario_free(s);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn errors_are_thread_local() {
    let s = scenario("main");
    let mut v = 0.0;
    unsafe { tq_scenario_get(s, c("nope").as_ptr(), &mut v) };
    let other = std::thread::spawn(|| tq_last_error().is_null()).join().unwrap();
    assert!(other);
    assert!(last_error().contains("nope"));
    unsafe { tq_scenario_free(s) };
}
