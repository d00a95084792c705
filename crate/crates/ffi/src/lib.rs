//! C ABI for the splitsys solver.
//!
//! All objects cross the boundary as opaque handles created by a
//! `splitsys_*_new`/`_from_*`/`_generate` call and released with the matching
//! `_free`. Fallible functions return a [`SplitsysStatus`]; on failure a
//! description is available from [`splitsys_last_error_message`] on the same
//! thread. Strings returned through out-parameters must be released with
//! [`splitsys_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splitsys::harness::{evaluate_run, generate_planted_system, Structure};
use splitsys::solver::{residual, solve, solve_baseline_fb};
use splitsys::{AlgoParams, BetaSchedule, Error, ProblemInstance, SolveOutcome, SolveStatus, Vector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitsysStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    NotMonotone = 5,
    Domain = 6,
    DimensionMismatch = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

/// Termination state of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitsysSolveStatus {
    Solved = 0,
    Interrupted = 1,
    MaxIterations = 3,
    LinesearchFailure = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitsysStructure {
    AffineVi = 0,
    MixedL1 = 1,
}

/// Opaque problem instance.
pub struct SplitsysInstance {
    inner: ProblemInstance,
}

/// Opaque solver parameters.
pub struct SplitsysParams {
    inner: AlgoParams,
}

/// Opaque solve result.
pub struct SplitsysResult {
    outcome: SolveOutcome,
    fejer_violations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SplitsysStatus {
    match e {
        Error::DimensionMismatch { .. } => SplitsysStatus::DimensionMismatch,
        Error::NotMonotone { .. } => SplitsysStatus::NotMonotone,
        Error::Domain { .. } => SplitsysStatus::Domain,
        Error::Json(_) => SplitsysStatus::Parse,
        Error::Io(_) => SplitsysStatus::Io,
        _ => SplitsysStatus::InvalidArgument,
    }
}

fn fail(status: SplitsysStatus, msg: impl Into<String>) -> SplitsysStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SplitsysStatus>) -> SplitsysStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplitsysStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SplitsysStatus::Internal, "panic inside splitsys"),
    }
}

fn lift<T>(r: splitsys::Result<T>) -> Result<T, SplitsysStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, SplitsysStatus> {
    p.as_ref().ok_or_else(|| fail(SplitsysStatus::NullPointer, "null handle"))
}

unsafe fn deref_mut<'a, T>(p: *mut T) -> Result<&'a mut T, SplitsysStatus> {
    p.as_mut().ok_or_else(|| fail(SplitsysStatus::NullPointer, "null handle"))
}

unsafe fn read_vector(data: *const f64, len: usize) -> Result<Vector, SplitsysStatus> {
    if data.is_null() {
        return Err(fail(SplitsysStatus::NullPointer, "null vector"));
    }
    Ok(Vector::from_column_slice(std::slice::from_raw_parts(data, len)))
}

unsafe fn write_vector(v: &Vector, out: *mut f64, len: usize) -> Result<(), SplitsysStatus> {
    if out.is_null() {
        return Err(fail(SplitsysStatus::NullPointer, "null output buffer"));
    }
    if len < v.len() {
        return Err(fail(
            SplitsysStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", v.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, v.len()).copy_from_slice(v.as_slice());
    Ok(())
}

unsafe fn write_string(s: String, out: *mut *mut c_char) -> Result<(), SplitsysStatus> {
    if out.is_null() {
        return Err(fail(SplitsysStatus::NullPointer, "null output pointer"));
    }
    let c = CString::new(s).map_err(|_| fail(SplitsysStatus::Internal, "string contains nul"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn write_handle<T>(value: T, out: *mut *mut T) -> Result<(), SplitsysStatus> {
    if out.is_null() {
        return Err(fail(SplitsysStatus::NullPointer, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn splitsys_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn splitsys_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an instance from JSON.
///
/// # Safety
/// `json` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_from_json(
    json: *const c_char,
    allow_unchecked: bool,
    out: *mut *mut SplitsysInstance,
) -> SplitsysStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(SplitsysStatus::NullPointer, "null json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(SplitsysStatus::Parse, "instance json is not utf-8"))?;
        let inner = lift(ProblemInstance::from_json(text, allow_unchecked))?;
        write_handle(SplitsysInstance { inner }, out)
    })
}

/// Generates an instance with a planted solution.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_generate(
    n: usize,
    m: usize,
    seed: u64,
    structure: SplitsysStructure,
    out: *mut *mut SplitsysInstance,
) -> SplitsysStatus {
    guard(|| {
        let s = match structure {
            SplitsysStructure::AffineVi => Structure::AffineVi,
            SplitsysStructure::MixedL1 => Structure::MixedL1,
        };
        let inner = lift(generate_planted_system(n, m, seed, s))?;
        write_handle(SplitsysInstance { inner }, out)
    })
}

/// Serializes an instance to JSON; free the result with [`splitsys_string_free`].
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_to_json(
    inst: *const SplitsysInstance,
    out: *mut *mut c_char,
) -> SplitsysStatus {
    guard(|| {
        let inst = deref(inst)?;
        let s = lift(inst.inner.to_json())?;
        write_string(s, out)
    })
}

/// Dimension `n`, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_dimension(inst: *const SplitsysInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.n)
}

/// Number of components `m`, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_components(inst: *const SplitsysInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.m)
}

/// Copies the known solution into `out[0..n]`.
///
/// # Safety
/// `inst` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_known_solution(
    inst: *const SplitsysInstance,
    out: *mut f64,
    len: usize,
) -> SplitsysStatus {
    guard(|| {
        let inst = deref(inst)?;
        let star = inst
            .inner
            .known_solution
            .as_ref()
            .ok_or_else(|| fail(SplitsysStatus::InvalidArgument, "instance has no known solution"))?;
        write_vector(star, out, len)
    })
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitsys_instance_free(inst: *mut SplitsysInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Default parameters; never null.
#[no_mangle]
pub extern "C" fn splitsys_params_new() -> *mut SplitsysParams {
    Box::into_raw(Box::new(SplitsysParams {
        inner: AlgoParams::default(),
    }))
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_free(p: *mut SplitsysParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn update_params(p: *mut SplitsysParams, f: impl FnOnce(&mut AlgoParams)) -> SplitsysStatus {
    guard(|| {
        let p = deref_mut(p)?;
        let mut next = p.inner.clone();
        f(&mut next);
        lift(next.validate())?;
        p.inner = next;
        Ok(())
    })
}

/// Backtracking factor in (0, 1).
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_theta(p: *mut SplitsysParams, theta: f64) -> SplitsysStatus {
    update_params(p, |a| a.theta = theta)
}

/// Acceptance constant in (0, 1).
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_delta(p: *mut SplitsysParams, delta: f64) -> SplitsysStatus {
    update_params(p, |a| a.delta = delta)
}

/// Step bounds; the schedule is reset to the midpoint.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_beta_bounds(p: *mut SplitsysParams, lo: f64, hi: f64) -> SplitsysStatus {
    update_params(p, |a| {
        a.beta_lo = lo;
        a.beta_hi = hi;
        a.beta_schedule = BetaSchedule::Midpoint;
    })
}

/// Constant step inside the current bounds.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_beta_constant(p: *mut SplitsysParams, beta: f64) -> SplitsysStatus {
    update_params(p, |a| a.beta_schedule = BetaSchedule::Constant { beta })
}

/// Per-component and outer tolerances.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_tolerances(
    p: *mut SplitsysParams,
    tol_component: f64,
    tol_outer: f64,
) -> SplitsysStatus {
    update_params(p, |a| {
        a.tol_component = tol_component;
        a.tol_outer = tol_outer;
    })
}

/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_limits(
    p: *mut SplitsysParams,
    max_outer: usize,
    max_linesearch: usize,
) -> SplitsysStatus {
    update_params(p, |a| {
        a.max_outer = max_outer;
        a.max_linesearch = max_linesearch;
    })
}

/// Selection radius; a non-positive value restores the instance default.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_params_set_radius(p: *mut SplitsysParams, radius: f64) -> SplitsysStatus {
    update_params(p, |a| a.radius = (radius > 0.0).then_some(radius))
}

/// Natural residual of `x` at step `beta`.
///
/// # Safety
/// `inst` must be a live handle, `x` must hold `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splitsys_residual(
    inst: *const SplitsysInstance,
    beta: f64,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> SplitsysStatus {
    guard(|| {
        let inst = deref(inst)?;
        let x = read_vector(x, len)?;
        if !(beta > 0.0) {
            return Err(fail(SplitsysStatus::InvalidArgument, "beta must be positive"));
        }
        let r = lift(residual(&inst.inner, beta, &x))?;
        if out.is_null() {
            return Err(fail(SplitsysStatus::NullPointer, "null output"));
        }
        *out = r;
        Ok(())
    })
}

fn finish(inst: &ProblemInstance, outcome: SolveOutcome) -> Result<SplitsysResult, SplitsysStatus> {
    let metrics = lift(evaluate_run(&outcome.trace, inst))?;
    Ok(SplitsysResult {
        outcome,
        fejer_violations: metrics.fejer_violations,
    })
}

/// Runs the solver. `x0` may be null to use the instance's default start.
/// Returns `Ok` whenever a run took place; inspect the result's status.
///
/// # Safety
/// Handles must be live; `x0` null or holding `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn splitsys_solve(
    inst: *const SplitsysInstance,
    params: *const SplitsysParams,
    x0: *const f64,
    len: usize,
    out: *mut *mut SplitsysResult,
) -> SplitsysStatus {
    guard(|| {
        let inst = deref(inst)?;
        let params = deref(params)?;
        let x0 = if x0.is_null() {
            inst.inner.default_start()
        } else {
            read_vector(x0, len)?
        };
        let outcome = lift(solve(&inst.inner, &params.inner, &x0))?;
        write_handle(finish(&inst.inner, outcome)?, out)
    })
}

/// Fixed-step forward-backward baseline on a single-component instance.
///
/// # Safety
/// As for [`splitsys_solve`].
#[no_mangle]
pub unsafe extern "C" fn splitsys_solve_baseline(
    inst: *const SplitsysInstance,
    x0: *const f64,
    len: usize,
    step: f64,
    max_iter: usize,
    tol: f64,
    out: *mut *mut SplitsysResult,
) -> SplitsysStatus {
    guard(|| {
        let inst = deref(inst)?;
        let x0 = if x0.is_null() {
            inst.inner.default_start()
        } else {
            read_vector(x0, len)?
        };
        let outcome = lift(solve_baseline_fb(&inst.inner, &x0, step, max_iter, tol))?;
        write_handle(finish(&inst.inner, outcome)?, out)
    })
}

/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_status(res: *const SplitsysResult) -> SplitsysSolveStatus {
    match res.as_ref().map(|r| r.outcome.status) {
        Some(SolveStatus::Solved) => SplitsysSolveStatus::Solved,
        Some(SolveStatus::MaxIterations) => SplitsysSolveStatus::MaxIterations,
        Some(SolveStatus::LinesearchFailure) => SplitsysSolveStatus::LinesearchFailure,
        Some(SolveStatus::Interrupted) | None => SplitsysSolveStatus::Interrupted,
    }
}

/// Completed outer iterations.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_iterations(res: *const SplitsysResult) -> usize {
    res.as_ref().map_or(0, |r| r.outcome.iterations())
}

/// Natural residual at the final iterate; NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_final_residual(res: *const SplitsysResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.outcome.final_residual())
}

/// Increases of the distance to the known solution across iterations.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_fejer_violations(res: *const SplitsysResult) -> usize {
    res.as_ref().map_or(0, |r| r.fejer_violations)
}

/// Copies the final iterate into `out[0..n]`.
///
/// # Safety
/// `res` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_x_final(
    res: *const SplitsysResult,
    out: *mut f64,
    len: usize,
) -> SplitsysStatus {
    guard(|| write_vector(&deref(res)?.outcome.x_final, out, len))
}

/// Trace as CSV text; free with [`splitsys_string_free`].
///
/// # Safety
/// `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_trace_csv(
    res: *const SplitsysResult,
    out: *mut *mut c_char,
) -> SplitsysStatus {
    guard(|| {
        let csv = lift(deref(res)?.outcome.trace.to_csv_string())?;
        write_string(csv, out)
    })
}

/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitsys_result_free(res: *mut SplitsysResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
