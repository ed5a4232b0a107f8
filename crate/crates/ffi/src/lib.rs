//! C ABI for the `stlopt` trajectory optimizer.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`StloptStatus`]; the message of the last failure on the calling thread
//! is available from [`stlopt_last_error`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stlopt::app::{self, Method, MethodResult};
use stlopt::nlp::{SolveStatus, SolverOptions};
use stlopt::scenario::{builtin, Scenario};
use stlopt::trajectory::Trajectory;
use stlopt::tree::TreeOptions;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StloptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Scenario = 4,
    Solver = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Formulation used by [`stlopt_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StloptMethod {
    Exact = 0,
    SmoothApprox = 1,
}

/// Solver outcome of a result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StloptSolveStatus {
    Optimal = 0,
    Feasible = 1,
    Infeasible = 2,
    MaxIter = 3,
}

impl From<SolveStatus> for StloptSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => StloptSolveStatus::Optimal,
            SolveStatus::Feasible => StloptSolveStatus::Feasible,
            SolveStatus::Infeasible => StloptSolveStatus::Infeasible,
            SolveStatus::MaxIter => StloptSolveStatus::MaxIter,
        }
    }
}

/// Solver settings; start from [`stlopt_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StloptOptions {
    pub kkt_tol: f64,
    pub feas_tol: f64,
    pub max_outer: u32,
    pub max_inner: u32,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    /// Smooth-baseline sharpness; `<= 0` selects it automatically.
    pub k: f64,
}

/// Opaque scenario handle.
pub struct StloptScenario(Scenario);

/// Opaque solve result handle.
pub struct StloptResult(MethodResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

/// Runs `f`, recording its error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (StloptStatus, String)>) -> StloptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StloptStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StloptStatus::Panic
        }
    }
}

fn null(what: &str) -> (StloptStatus, String) {
    (StloptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (StloptStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (StloptStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn scenario_err(e: stlopt::Error) -> (StloptStatus, String) {
    (StloptStatus::Scenario, e.to_string())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stlopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stlopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default solver settings with automatic sharpness selection.
#[no_mangle]
pub extern "C" fn stlopt_options_default() -> StloptOptions {
    let d = SolverOptions::default();
    StloptOptions {
        kkt_tol: d.kkt_tol,
        feas_tol: d.feas_tol,
        max_outer: d.max_outer as u32,
        max_inner: d.max_inner as u32,
        time_limit: d.time_limit,
        k: 0.0,
    }
}

/// Loads a built-in scenario. `horizon == 0` keeps its default horizon.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlopt_scenario_builtin(
    name: *const c_char,
    horizon: u32,
    out: *mut *mut StloptScenario,
) -> StloptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(name, "name")?;
        let t = (horizon > 0).then_some(horizon as usize);
        let s = builtin(name, t).map_err(scenario_err)?;
        *out = Box::into_raw(Box::new(StloptScenario(s)));
        Ok(())
    })
}

/// Parses a scenario from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlopt_scenario_from_json(json: *const c_char, out: *mut *mut StloptScenario) -> StloptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let s = Scenario::from_json(text).map_err(scenario_err)?;
        *out = Box::into_raw(Box::new(StloptScenario(s)));
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stlopt_scenario_free(s: *mut StloptScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Horizon `T`; trajectories have `T + 1` samples. Zero for null.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stlopt_scenario_horizon(s: *const StloptScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.horizon())
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stlopt_scenario_state_dim(s: *const StloptScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.state_dim())
}

/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stlopt_scenario_input_dim(s: *const StloptScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.input_dim())
}

/// Discrete robustness of a trajectory given as row-major buffers of
/// `(T + 1)·n` states and `(T + 1)·m` inputs.
///
/// # Safety
/// Buffers must hold the stated number of doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stlopt_robustness(
    s: *const StloptScenario,
    states: *const f64,
    states_len: usize,
    inputs: *const f64,
    inputs_len: usize,
    out: *mut f64,
) -> StloptStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("scenario"))?.0;
        if states.is_null() || inputs.is_null() || out.is_null() {
            return Err(null("buffer"));
        }
        let x = Trajectory::from_flat(
            s.state_dim(),
            s.input_dim(),
            std::slice::from_raw_parts(states, states_len).to_vec(),
            std::slice::from_raw_parts(inputs, inputs_len).to_vec(),
        )
        .map_err(|e| (StloptStatus::InvalidArgument, e.to_string()))?;
        *out = s
            .formula
            .robustness(&x, 0)
            .map_err(|e| (StloptStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Solves the scenario from its reference trajectory. `options` may be null
/// for defaults.
///
/// # Safety
/// `s` must be a live scenario handle, `options` null or valid, and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlopt_solve(
    s: *const StloptScenario,
    method: StloptMethod,
    options: *const StloptOptions,
    out: *mut *mut StloptResult,
) -> StloptStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("scenario"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = options.as_ref().copied().unwrap_or_else(|| stlopt_options_default());
        if !(o.kkt_tol > 0.0 && o.feas_tol >= 0.0 && o.time_limit > 0.0) {
            return Err((
                StloptStatus::InvalidArgument,
                "tolerances and time limit must be positive".into(),
            ));
        }
        let opts = SolverOptions {
            kkt_tol: o.kkt_tol,
            feas_tol: o.feas_tol,
            max_outer: o.max_outer as usize,
            max_inner: o.max_inner as usize,
            time_limit: o.time_limit,
            ..SolverOptions::default()
        };
        let tree = s.tree(TreeOptions::default()).map_err(scenario_err)?;
        let init = s.reference_trajectory();
        let solver_err = |e: stlopt::Error| (StloptStatus::Solver, e.to_string());
        let r = match method {
            StloptMethod::Exact => app::run_method(s, &tree, Method::Exact, 0.0, &init, false, &opts),
            StloptMethod::SmoothApprox => {
                let k = (o.k > 0.0).then_some(o.k);
                app::run_baseline(s, &tree, k, &init, &opts)
            }
        }
        .map_err(solver_err)?;
        *out = Box::into_raw(Box::new(StloptResult(r)));
        Ok(())
    })
}

/// Releases a result; null is ignored.
///
/// # Safety
/// `r` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_free(r: *mut StloptResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be null or a live result handle; null gives NaN (or
/// `Infeasible` for the status).
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_status(r: *const StloptResult) -> StloptSolveStatus {
    r.as_ref().map_or(StloptSolveStatus::Infeasible, |r| r.0.status.into())
}

/// `−α·ρ + Σ xᵀQx + uᵀRu` with the discrete robustness.
///
/// # Safety
/// `r` must be null or a live result handle; null gives NaN (or
/// `Infeasible` for the status).
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_objective(r: *const StloptResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.objective)
}

/// Discrete robustness of the returned trajectory.
///
/// # Safety
/// `r` must be null or a live result handle; null gives NaN (or
/// `Infeasible` for the status).
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_robustness(r: *const StloptResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.robustness)
}

/// Solve time in seconds.
///
/// # Safety
/// `r` must be null or a live result handle; null gives NaN (or
/// `Infeasible` for the status).
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_solve_time(r: *const StloptResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.solve_time)
}

/// Sharpness used by the smooth baseline, or 0 for the exact method.
///
/// # Safety
/// `r` must be null or a live result handle; null gives NaN (or
/// `Infeasible` for the status).
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_k(r: *const StloptResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.k.unwrap_or(0.0))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), (StloptStatus, String)> {
    if !written.is_null() {
        *written = src.len();
    }
    if buf.is_null() {
        return Ok(());
    }
    if len < src.len() {
        return Err((
            StloptStatus::BufferTooSmall,
            format!("need {} values, got room for {len}", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the `(T + 1)·n` row-major states into `buf`. With a null `buf`
/// only the required length is stored in `written`.
///
/// # Safety
/// `r` must be a live result handle; `buf` null or valid for `len` doubles;
/// `written` null or valid.
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_states(
    r: *const StloptResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> StloptStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        copy_out(r.trajectory.states_flat(), buf, len, written)
    })
}

/// Copies the `(T + 1)·m` row-major inputs; same contract as
/// [`stlopt_result_states`].
///
/// # Safety
/// See [`stlopt_result_states`].
#[no_mangle]
pub unsafe extern "C" fn stlopt_result_inputs(
    r: *const StloptResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> StloptStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        copy_out(r.trajectory.inputs_flat(), buf, len, written)
    })
}
