//! C ABI for the `decouple-sim` engine.
//!
//! Every fallible function returns a [`DsStatus`]. On failure a message is
//! stored per thread and can be read with [`ds_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use decouple_sim::bath::{bath_autocorrelations, ErrorClass, ReservoirSpec, ThermalParams};
use decouple_sim::control::{control_field, ControlMode, ControlParams};
use decouple_sim::experiment::{self, load_scenario, parse_scenario, to_report, ScenarioConfig, TableCache};
use decouple_sim::redfield::Trajectory;
use decouple_sim::su2::density_from_bloch;
use decouple_sim::SimError;

/// Status codes; the non-zero values match the command-line exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    Failure = 1,
    InvalidInput = 2,
    NotConverged = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Drive selector for [`ds_control_field`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsControlMode {
    Bare = 0,
    DephasingProtect = 1,
    FullProtect = 2,
}

/// Parsed and validated scenario.
pub struct DsScenario {
    config: ScenarioConfig,
}

/// Fidelity trajectory of one initial state.
pub struct DsTrajectory {
    trajectory: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &SimError) -> DsStatus {
    match err.exit_code() {
        2 => DsStatus::InvalidInput,
        3 => DsStatus::NotConverged,
        _ => DsStatus::Failure,
    }
}

fn guard<F: FnOnce() -> Result<(), SimError>>(f: F) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DsStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            DsStatus::Panic
        }
    }
}

fn null_error(what: &str) -> SimError {
    SimError::Usage(format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, SimError> {
    if p.is_null() {
        return Err(null_error(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| SimError::Config(format!("{what} is not valid UTF-8")))
}

macro_rules! non_null {
    ($p:expr, $what:expr) => {
        if $p.is_null() {
            set_error(concat!($what, " is null"));
            return DsStatus::NullPointer;
        }
    };
}

/// Message describing the most recent failure on this thread; empty after a success.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses scenario text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_parse(text: *const c_char, out: *mut *mut DsScenario) -> DsStatus {
    non_null!(text, "text");
    non_null!(out, "out");
    *out = ptr::null_mut();
    guard(|| {
        let config = parse_scenario(read_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(DsScenario { config }));
        Ok(())
    })
}

/// Reads a scenario file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_load(path: *const c_char, out: *mut *mut DsScenario) -> DsStatus {
    non_null!(path, "path");
    non_null!(out, "out");
    *out = ptr::null_mut();
    guard(|| {
        let config = load_scenario(read_str(path, "path")?)?;
        *out = Box::into_raw(Box::new(DsScenario { config }));
        Ok(())
    })
}

/// Releases a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_free(scenario: *mut DsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Overrides the integration step count (0 restores the per-drive default).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_set_steps(scenario: *mut DsScenario, steps: usize) -> DsStatus {
    non_null!(scenario, "scenario");
    let s = &mut *scenario;
    s.config.steps = (steps > 0).then_some(steps);
    DsStatus::Ok
}

/// Dimensionless inverse temperature used by the scenario.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_beta_omega_c(scenario: *const DsScenario, out: *mut f64) -> DsStatus {
    non_null!(scenario, "scenario");
    non_null!(out, "out");
    guard(|| {
        *out = (*scenario).config.thermal()?.beta_omega_c;
        Ok(())
    })
}

/// Runs the scenario's experiment and writes its CSV to `path`.
///
/// The CSV is written even when the step-doubling check fails, in which
/// case `NotConverged` is returned.
///
/// # Safety
/// `scenario` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ds_run_to_csv(scenario: *const DsScenario, path: *const c_char) -> DsStatus {
    non_null!(scenario, "scenario");
    non_null!(path, "path");
    guard(|| {
        let path = read_str(path, "path")?;
        let cfg = &(*scenario).config;
        let outcome = experiment::run(cfg)?;
        to_report(cfg, &outcome).save(path)?;
        if outcome.converged() {
            Ok(())
        } else {
            Err(SimError::NotConverged {
                steps: cfg.steps.unwrap_or(0),
                difference: f64::NAN,
                tolerance: cfg.tol,
            })
        }
    })
}

fn mode_from(mode: DsControlMode, n: u32, m: u32) -> ControlMode {
    match mode {
        DsControlMode::Bare => ControlMode::Bare,
        DsControlMode::DephasingProtect => ControlMode::DephasingProtect { n },
        DsControlMode::FullProtect => ControlMode::FullProtect { n, m },
    }
}

/// Control field `(hx, hy, hz)` in units of `1/tau` at time `t` in `[0, tau]`.
///
/// # Safety
/// `out` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_control_field(
    mode: DsControlMode,
    n: u32,
    m: u32,
    tau: f64,
    t: f64,
    out: *mut f64,
) -> DsStatus {
    non_null!(out, "out");
    guard(|| {
        let p = ControlParams::new(tau, mode_from(mode, n, m))?;
        let f = control_field(t, &p)?;
        let out = std::slice::from_raw_parts_mut(out, 3);
        out.copy_from_slice(&[f.x(), f.y(), f.z()]);
        Ok(())
    })
}

/// Bath autocorrelations `I1(delta)` and `I2(delta)` as `(re, im)` pairs.
///
/// # Safety
/// `out_i1` and `out_i2` must each point to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_bath_kernels(
    eta: f64,
    s: u32,
    omega_c: f64,
    beta_omega_c: f64,
    delta: f64,
    out_i1: *mut f64,
    out_i2: *mut f64,
) -> DsStatus {
    non_null!(out_i1, "out_i1");
    non_null!(out_i2, "out_i2");
    guard(|| {
        let r = ReservoirSpec::new(ErrorClass::Dephasing, eta, s, omega_c)?;
        let th = ThermalParams::new(beta_omega_c, omega_c)?;
        let (i1, i2) = bath_autocorrelations(delta, &r, &th)?;
        std::slice::from_raw_parts_mut(out_i1, 2).copy_from_slice(&[i1.re, i1.im]);
        std::slice::from_raw_parts_mut(out_i2, 2).copy_from_slice(&[i2.re, i2.im]);
        Ok(())
    })
}

/// Integrates the scenario's drive and baths from the pure state at Bloch angles `(theta, phi)`.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_evolve(
    scenario: *const DsScenario,
    theta: f64,
    phi: f64,
    out: *mut *mut DsTrajectory,
) -> DsStatus {
    non_null!(scenario, "scenario");
    non_null!(out, "out");
    *out = ptr::null_mut();
    guard(|| {
        let cfg = &(*scenario).config;
        let thermal = cfg.thermal()?;
        let integrator = cfg.integrator(&cfg.control)?;
        let dynamics = TableCache::new().dynamics(cfg.control, integrator, &cfg.reservoirs, &thermal)?;
        let trajectory = dynamics.evolve(&density_from_bloch(theta, phi))?;
        *out = Box::into_raw(Box::new(DsTrajectory { trajectory }));
        Ok(())
    })
}

/// Releases a trajectory handle. Null is ignored.
///
/// # Safety
/// `trajectory` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_free(trajectory: *mut DsTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of grid points in the trajectory (0 for a null handle).
///
/// # Safety
/// `trajectory` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_len(trajectory: *const DsTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.trajectory.times.len())
}

/// Copies up to `len` times (in units of `tau`) and fidelities into the buffers.
///
/// # Safety
/// `trajectory` must be a live handle; each non-null buffer must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_copy(
    trajectory: *const DsTrajectory,
    times: *mut f64,
    fidelity: *mut f64,
    len: usize,
) -> DsStatus {
    non_null!(trajectory, "trajectory");
    let t = &(*trajectory).trajectory;
    let n = len.min(t.times.len());
    if !times.is_null() {
        std::slice::from_raw_parts_mut(times, n).copy_from_slice(&t.times[..n]);
    }
    if !fidelity.is_null() {
        std::slice::from_raw_parts_mut(fidelity, n).copy_from_slice(&t.fidelity[..n]);
    }
    DsStatus::Ok
}

/// `F(tau)`, its doubled-grid value and whether they agree within the scenario tolerance.
///
/// # Safety
/// `trajectory` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_summary(
    trajectory: *const DsTrajectory,
    final_fidelity: *mut f64,
    refined_fidelity: *mut f64,
    converged: *mut bool,
) -> DsStatus {
    non_null!(trajectory, "trajectory");
    let t = &(*trajectory).trajectory;
    if !final_fidelity.is_null() {
        *final_fidelity = t.final_fidelity();
    }
    if !refined_fidelity.is_null() {
        *refined_fidelity = t.convergence.map_or(f64::NAN, |c| c.refined_fidelity);
    }
    if !converged.is_null() {
        *converged = t.converged();
    }
    DsStatus::Ok
}
