use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use decouple_sim::bath::{bath_autocorrelations, ErrorClass, ReservoirSpec, ThermalParams};
use decouple_sim::control::{control_field, ControlMode, ControlParams};
use decouple_sim::experiment::CsvTable;
use decouple_sim_ffi::*;

const SHORT_TRACE: &str = "experiment = trace\ncontrol.mode = bare\nintegrator.steps = 400\nintegrator.tol = 1\n";

fn last_error() -> String {
    unsafe { CStr::from_ptr(ds_last_error()) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> (DsStatus, *mut DsScenario) {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { ds_scenario_parse(c.as_ptr(), &mut out) };
    (status, out)
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ds_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn parse_reports_status_and_message() {
    let (status, handle) = parse(SHORT_TRACE);
    assert_eq!(status, DsStatus::Ok);
    assert!(!handle.is_null());
    assert_eq!(last_error(), "");
    let mut beta = 0.0;
    assert_eq!(unsafe { ds_scenario_beta_omega_c(handle, &mut beta) }, DsStatus::Ok);
    assert!((beta - 1.919_697_228_170_253).abs() < 1e-9);
    unsafe { ds_scenario_free(handle) };

    let (status, handle) = parse("experiment = trace\ncontrol.mode = full_protect\ncontrol.n = 3\n");
    assert_eq!(status, DsStatus::InvalidInput);
    assert!(handle.is_null());
    assert!(last_error().contains("control.m"), "{}", last_error());

    let (status, _) = parse("experiment = trace\nno_equals_here\n");
    assert_eq!(status, DsStatus::InvalidInput);
    assert!(last_error().contains("line 2"), "{}", last_error());
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ds_scenario_parse(ptr::null(), &mut out) }, DsStatus::NullPointer);
    assert!(last_error().contains("text"));
    let c = CString::new(SHORT_TRACE).unwrap();
    assert_eq!(unsafe { ds_scenario_parse(c.as_ptr(), ptr::null_mut()) }, DsStatus::NullPointer);
    assert_eq!(unsafe { ds_control_field(DsControlMode::Bare, 0, 0, 1.0, 0.5, ptr::null_mut()) }, DsStatus::NullPointer);
    assert_eq!(unsafe { ds_trajectory_len(ptr::null()) }, 0);
    unsafe {
        ds_scenario_free(ptr::null_mut());
        ds_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn missing_scenario_file_is_a_failure() {
    let path = CString::new("/nonexistent/dir/x.scenario").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { ds_scenario_load(path.as_ptr(), &mut out) };
    assert_ne!(status, DsStatus::Ok);
    assert!(out.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn control_field_matches_the_library() {
    let cases = [
        (DsControlMode::Bare, ControlMode::Bare),
        (DsControlMode::DephasingProtect, ControlMode::DephasingProtect { n: 5 }),
        (DsControlMode::FullProtect, ControlMode::FullProtect { n: 5, m: 2 }),
    ];
    for (ffi_mode, mode) in cases {
        let (n, m) = mode.windings();
        let p = ControlParams::new(1.0, mode).unwrap();
        for t in [0.0, 0.13, 0.5, 0.87, 1.0] {
            let mut out = [0.0; 3];
            assert_eq!(unsafe { ds_control_field(ffi_mode, n, m, 1.0, t, out.as_mut_ptr()) }, DsStatus::Ok);
            let f = control_field(t, &p).unwrap();
            assert_eq!(out, [f.x(), f.y(), f.z()]);
        }
    }
    let mut out = [0.0; 3];
    assert_eq!(
        unsafe { ds_control_field(DsControlMode::Bare, 0, 0, -1.0, 0.5, out.as_mut_ptr()) },
        DsStatus::InvalidInput
    );
}

#[test]
fn bath_kernels_match_the_library() {
    let omega_c = 2.0 * std::f64::consts::PI;
    let r = ReservoirSpec::new(ErrorClass::Dephasing, 0.0625, 3, omega_c).unwrap();
    let th = ThermalParams::new(1.9197, omega_c).unwrap();
    for delta in [0.0, 0.05, 0.4] {
        let (mut i1, mut i2) = ([0.0; 2], [0.0; 2]);
        let status = unsafe { ds_bath_kernels(0.0625, 3, omega_c, 1.9197, delta, i1.as_mut_ptr(), i2.as_mut_ptr()) };
        assert_eq!(status, DsStatus::Ok);
        let (a, b) = bath_autocorrelations(delta, &r, &th).unwrap();
        assert_eq!(i1, [a.re, a.im]);
        assert_eq!(i2, [b.re, b.im]);
    }
    let (mut i1, mut i2) = ([0.0; 2], [0.0; 2]);
    let status = unsafe { ds_bath_kernels(0.1, 0, omega_c, 1.0, 0.0, i1.as_mut_ptr(), i2.as_mut_ptr()) };
    assert_eq!(status, DsStatus::InvalidInput);
}

#[test]
fn evolve_and_read_back_a_trajectory() {
    let (status, scenario) = parse(SHORT_TRACE);
    assert_eq!(status, DsStatus::Ok);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { ds_evolve(scenario, std::f64::consts::FRAC_PI_2, 0.0, &mut traj) }, DsStatus::Ok);
    let len = unsafe { ds_trajectory_len(traj) };
    assert_eq!(len, 401);
    let mut times = vec![0.0; len];
    let mut fid = vec![0.0; len];
    assert_eq!(
        unsafe { ds_trajectory_copy(traj, times.as_mut_ptr(), fid.as_mut_ptr(), len) },
        DsStatus::Ok
    );
    assert_eq!(times[0], 0.0);
    assert!((times[len - 1] - 1.0).abs() < 1e-12);
    assert!((fid[0] - 1.0).abs() < 1e-12);
    let (mut f, mut refined, mut converged) = (0.0, 0.0, false);
    assert_eq!(
        unsafe { ds_trajectory_summary(traj, &mut f, &mut refined, &mut converged) },
        DsStatus::Ok
    );
    assert_eq!(f, fid[len - 1]);
    assert!(f > 0.5 && f < 0.75, "{f}");
    assert!((f - refined).abs() < 1e-2);
    assert!(converged);
    unsafe {
        ds_trajectory_free(traj);
        ds_scenario_free(scenario);
    }
}

#[test]
fn run_to_csv_writes_a_readable_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let (_, scenario) = parse(SHORT_TRACE);
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ds_run_to_csv(scenario, c_path.as_ptr()) }, DsStatus::Ok);
    let table = CsvTable::load(&path).unwrap();
    assert_eq!(table.columns, ["t_over_tau", "F_bare"]);
    assert_eq!(table.rows.len(), 401);

    unsafe { ds_scenario_set_steps(scenario, 1) };
    assert_eq!(unsafe { ds_run_to_csv(scenario, c_path.as_ptr()) }, DsStatus::InvalidInput);
    unsafe { ds_scenario_free(scenario) };
}

#[test]
fn strict_tolerance_reports_not_converged() {
    let text = SHORT_TRACE.replace("integrator.tol = 1", "integrator.tol = 1e-15");
    let (_, scenario) = parse(&text);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ds_run_to_csv(scenario, c_path.as_ptr()) }, DsStatus::NotConverged);
    assert!(path.exists());
    unsafe { ds_scenario_free(scenario) };
}

fn header_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/decouple_sim.h")
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(header_path()).unwrap();
    for name in [
        "ds_last_error",
        "ds_version",
        "ds_scenario_parse",
        "ds_scenario_load",
        "ds_scenario_free",
        "ds_scenario_set_steps",
        "ds_scenario_beta_omega_c",
        "ds_run_to_csv",
        "ds_control_field",
        "ds_bath_kernels",
        "ds_evolve",
        "ds_trajectory_free",
        "ds_trajectory_len",
        "ds_trajectory_copy",
        "ds_trajectory_summary",
        "typedef struct DsScenario DsScenario",
        "typedef struct DsTrajectory DsTrajectory",
        "DS_STATUS_NOT_CONVERGED = 3",
        "DS_CONTROL_MODE_FULL_PROTECT = 2",
        "#ifndef DECOUPLE_SIM_H",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "decouple_sim.h"

int main(void) {
    double f[3];
    if (ds_control_field(DS_CONTROL_MODE_DEPHASING_PROTECT, 5, 0, 1.0, 0.25, f) != DS_STATUS_OK) return 1;
    DsScenario *s = NULL;
    if (ds_scenario_parse("experiment = trace\nbogus.key = 1\n", &s) != DS_STATUS_INVALID_INPUT) return 2;
    if (strlen(ds_last_error()) == 0 || s != NULL) return 3;
    if (ds_scenario_parse("experiment = trace\ncontrol.mode = bare\nintegrator.steps = 200\nintegrator.tol = 1\n", &s)
        != DS_STATUS_OK) return 4;
    DsTrajectory *t = NULL;
    if (ds_evolve(s, 1.5707963267948966, 0.0, &t) != DS_STATUS_OK) return 5;
    double fin = 0.0;
    bool ok = false;
    ds_trajectory_summary(t, &fin, NULL, &ok);
    printf("%zu %.6f %.6f %.6f %.6f\n", ds_trajectory_len(t), fin, f[0], f[1], f[2]);
    ds_trajectory_free(t);
    ds_scenario_free(s);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libdecouple_sim_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    let bin = dir.path().join("probe");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header_path().parent().unwrap().to_path_buf();
    let compiled = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .expect("a C compiler named cc");
    assert!(compiled.status.success(), "{}", String::from_utf8_lossy(&compiled.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "probe exited with {:?}", run.status);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<f64> = stdout.split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(fields[0], 201.0);
    assert!(fields[1] > 0.5 && fields[1] < 0.75);
    let p = ControlParams::new(1.0, ControlMode::DephasingProtect { n: 5 }).unwrap();
    let expect = control_field(0.25, &p).unwrap();
    assert!((fields[2] - expect.x()).abs() < 1e-5);
}
