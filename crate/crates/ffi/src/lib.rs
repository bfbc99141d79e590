//! C ABI over `singflow`.
//!
//! Objects cross the boundary as opaque handles created by `sf_*_new` /
//! `sf_*_solve` style constructors and released with the matching `sf_*_free`.
//! Every fallible call returns an [`SfStatus`]; on failure a message is
//! available from [`sf_last_error_message`] on the same thread. Output
//! arrays are caller-allocated, with their capacity passed alongside.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use singflow::diagnostics::all_passed;
use singflow::elliptic::{self, ContinuationSchedule, EllipticProblem, EllipticSolution, SolveError, SolverOptions};
use singflow::grid::{Field, PeriodicGrid};
use singflow::nonlinearity::NonlinearW;
use singflow::orlicz::{self, OrliczPhi};
use singflow::parabolic::{self, EvolutionProblem, EvolutionTrace};
use singflow::scenario;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    NotApplicable = 4,
    NotExtinct = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("no interior NUL"));
}

fn fail(status: SfStatus, msg: impl std::fmt::Display) -> SfStatus {
    set_error(msg);
    status
}

fn solve_status(e: &SolveError) -> SfStatus {
    match e {
        SolveError::NonConvergence { .. } => SfStatus::NonConvergence,
        _ => SfStatus::InvalidArgument,
    }
}

/// Runs `f`, turning panics into [`SfStatus::Panic`].
fn guard(f: impl FnOnce() -> SfStatus) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SfStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(SfStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn slice<'a>(data: *const f64, len: usize) -> Option<&'a [f64]> {
    if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, len))
    }
}

unsafe fn field_from(data: *const f64, n: usize) -> Result<Field, SfStatus> {
    let values = slice(data, n).ok_or_else(|| fail(SfStatus::NullPointer, "null data pointer"))?;
    let grid = PeriodicGrid::new(n).map_err(|e| fail(SfStatus::InvalidArgument, e))?;
    Field::new(grid, values.to_vec()).map_err(|e| fail(SfStatus::InvalidArgument, e))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize) -> SfStatus {
    if out.is_null() {
        return fail(SfStatus::NullPointer, "null output buffer");
    }
    if capacity < src.len() {
        return fail(
            SfStatus::BufferTooSmall,
            format!("need {} entries, buffer holds {capacity}", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    SfStatus::Ok
}

fn store<T>(out: *mut *mut T, value: T) -> SfStatus {
    unsafe { *out = Box::into_raw(Box::new(value)) };
    SfStatus::Ok
}

unsafe fn free_handle<T>(h: *mut T) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

// ---------------------------------------------------------------- integrand

/// Opaque integrand `W`.
pub struct SfNonlinearity(NonlinearW);

/// Catalog integrand by name: `abs`, `two_kink`, `minimal_surface`,
/// `abs_plus_ms`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_nonlinearity_new(name: *const c_char, out: *mut *mut SfNonlinearity) -> SfStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(SfStatus::InvalidArgument, "name is not UTF-8");
        };
        match NonlinearW::by_name(name) {
            Ok(w) => store(out, SfNonlinearity(w)),
            Err(e) => fail(SfStatus::InvalidArgument, e),
        }
    })
}

/// Piecewise-linear integrand from `(breakpoint, slope)` pairs on `p ≥ 0`.
///
/// # Safety
/// `breakpoints` and `slopes` must point to `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_nonlinearity_custom(
    breakpoints: *const f64,
    slopes: *const f64,
    len: usize,
    out: *mut *mut SfNonlinearity,
) -> SfStatus {
    guard(|| {
        let (Some(b), Some(s)) = (slice(breakpoints, len), slice(slopes, len)) else {
            return fail(SfStatus::NullPointer, "null breakpoints or slopes");
        };
        if out.is_null() {
            return fail(SfStatus::NullPointer, "null output");
        }
        match NonlinearW::custom(b.iter().copied().zip(s.iter().copied()).collect()) {
            Ok(w) => store(out, SfNonlinearity(w)),
            Err(e) => fail(SfStatus::InvalidArgument, e),
        }
    })
}

/// `W(p)`.
///
/// # Safety
/// `w` must come from a constructor above; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_nonlinearity_eval(w: *const SfNonlinearity, p: f64, value: *mut f64) -> SfStatus {
    guard(|| {
        if w.is_null() || value.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        *value = (*w).0.eval(p);
        SfStatus::Ok
    })
}

/// Subdifferential `∂W(p) = [lo, hi]`.
///
/// # Safety
/// `w` must be a live handle; `lo` and `hi` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_nonlinearity_subdiff(
    w: *const SfNonlinearity,
    p: f64,
    lo: *mut f64,
    hi: *mut f64,
) -> SfStatus {
    guard(|| {
        if w.is_null() || lo.is_null() || hi.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let d = (*w).0.subdiff(p);
        *lo = d.lo;
        *hi = d.hi;
        SfStatus::Ok
    })
}

/// Recession slope `W^∞` and coercivity constant `α`.
///
/// # Safety
/// `w` must be a live handle; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_nonlinearity_constants(
    w: *const SfNonlinearity,
    w_inf: *mut f64,
    alpha: *mut f64,
) -> SfStatus {
    guard(|| {
        if w.is_null() || w_inf.is_null() || alpha.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        *w_inf = (*w).0.w_inf();
        *alpha = (*w).0.alpha();
        SfStatus::Ok
    })
}

/// # Safety
/// `w` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_nonlinearity_free(w: *mut SfNonlinearity) {
    free_handle(w)
}

// ---------------------------------------------------------------- elliptic

/// Opaque elliptic solution.
pub struct SfEllipticSolution(EllipticSolution);

/// Scalar diagnostics of an elliptic solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SfSolveReport {
    pub newton_iters: u64,
    pub objective_value: f64,
    pub weak_residual: f64,
    pub inclusion_gap: f64,
    pub energy: f64,
    /// NaN when no modulus was computed.
    pub modulus_g: f64,
}

#[allow(clippy::too_many_arguments)]
unsafe fn elliptic_common(
    f: *const f64,
    n: usize,
    h: f64,
    w: *const SfNonlinearity,
    gamma: f64,
    epsilon: f64,
    out: *mut *mut SfEllipticSolution,
    continuation: bool,
) -> SfStatus {
    if w.is_null() || out.is_null() {
        return fail(SfStatus::NullPointer, "null argument");
    }
    let f = match field_from(f, n) {
        Ok(f) => f,
        Err(s) => return s,
    };
    let problem = match EllipticProblem::new(f.clone(), h, (*w).0.clone(), gamma, epsilon) {
        Ok(p) => p,
        Err(e) => return fail(SfStatus::InvalidArgument, e),
    };
    let opts = SolverOptions::for_grid(n);
    let result = if continuation {
        elliptic::continue_epsilon(&problem, &ContinuationSchedule::down_to(gamma, epsilon), &opts)
            .map(|(s, _)| s)
            .map_err(|e| e.source)
    } else {
        elliptic::minimize(&problem, &f, &opts)
    };
    match result {
        Ok(sol) => store(out, SfEllipticSolution(sol)),
        Err(e) => fail(solve_status(&e), e),
    }
}

/// One regularized solve started from `u = f`.
///
/// # Safety
/// `f` must point to `n` values; `w` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_solve(
    f: *const f64,
    n: usize,
    h: f64,
    w: *const SfNonlinearity,
    gamma: f64,
    epsilon: f64,
    out: *mut *mut SfEllipticSolution,
) -> SfStatus {
    guard(|| elliptic_common(f, n, h, w, gamma, epsilon, out, false))
}

/// Continuation from `γ = ε = 1e-2` down to the given final values.
///
/// # Safety
/// As for [`sf_elliptic_solve`].
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_continue(
    f: *const f64,
    n: usize,
    h: f64,
    w: *const SfNonlinearity,
    gamma: f64,
    epsilon: f64,
    out: *mut *mut SfEllipticSolution,
) -> SfStatus {
    guard(|| elliptic_common(f, n, h, w, gamma, epsilon, out, true))
}

/// Grid size of the solution.
///
/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_solution_len(sol: *const SfEllipticSolution) -> usize {
    if sol.is_null() {
        0
    } else {
        (*sol).0.u.len()
    }
}

/// Copies `u` into `out` (capacity `capacity`).
///
/// # Safety
/// `sol` must be live; `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_solution_u(
    sol: *const SfEllipticSolution,
    out: *mut f64,
    capacity: usize,
) -> SfStatus {
    guard(|| {
        if sol.is_null() {
            return fail(SfStatus::NullPointer, "null solution");
        }
        copy_out((*sol).0.u.values(), out, capacity)
    })
}

/// Copies the flux `ξ` (interface values) into `out`.
///
/// # Safety
/// As for [`sf_elliptic_solution_u`].
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_solution_xi(
    sol: *const SfEllipticSolution,
    out: *mut f64,
    capacity: usize,
) -> SfStatus {
    guard(|| {
        if sol.is_null() {
            return fail(SfStatus::NullPointer, "null solution");
        }
        copy_out((*sol).0.xi.values(), out, capacity)
    })
}

/// # Safety
/// `sol` must be live; `report` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_solution_report(
    sol: *const SfEllipticSolution,
    report: *mut SfSolveReport,
) -> SfStatus {
    guard(|| {
        if sol.is_null() || report.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let r = &(*sol).0.report;
        *report = SfSolveReport {
            newton_iters: r.newton_iters as u64,
            objective_value: r.objective_value,
            weak_residual: r.weak_residual,
            inclusion_gap: r.inclusion_gap,
            energy: r.energy,
            modulus_g: r.modulus_g.unwrap_or(f64::NAN),
        };
        SfStatus::Ok
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_elliptic_solution_free(sol: *mut SfEllipticSolution) {
    free_handle(sol)
}

// ---------------------------------------------------------------- evolution

/// Opaque trajectory.
pub struct SfEvolution(EvolutionTrace);

/// Per-step diagnostics; step 0 is the initial state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SfStepRecord {
    pub step: u64,
    pub t: f64,
    pub energy: f64,
    pub modulus_g: f64,
    pub mean: f64,
    pub dist_to_mean: f64,
    pub dissipation: f64,
    pub xi_bound: f64,
    pub inclusion_gap: f64,
}

/// Implicit Euler from `u0` with time step `dt` up to `t_end`.
///
/// # Safety
/// `u0` must point to `n` values; `w` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_evolve(
    u0: *const f64,
    n: usize,
    w: *const SfNonlinearity,
    gamma: f64,
    dt: f64,
    t_end: f64,
    stop_at_extinction: bool,
    out: *mut *mut SfEvolution,
) -> SfStatus {
    guard(|| {
        if w.is_null() || out.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let u0 = match field_from(u0, n) {
            Ok(f) => f,
            Err(s) => return s,
        };
        let problem = match EvolutionProblem::new(u0, (*w).0.clone(), gamma, dt, t_end) {
            Ok(p) => p.with_stop_at_extinction(stop_at_extinction),
            Err(e) => return fail(SfStatus::InvalidArgument, e),
        };
        match parabolic::evolve(&problem, 0) {
            Ok(tr) => store(out, SfEvolution(tr)),
            Err(e) => fail(solve_status(&e.source), e),
        }
    })
}

/// Number of records, the initial one included.
///
/// # Safety
/// `ev` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_evolution_len(ev: *const SfEvolution) -> usize {
    if ev.is_null() {
        0
    } else {
        (*ev).0.summary.records.len()
    }
}

/// # Safety
/// `ev` must be live; `record` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_evolution_record(ev: *const SfEvolution, k: usize, record: *mut SfStepRecord) -> SfStatus {
    guard(|| {
        if ev.is_null() || record.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let records = &(*ev).0.summary.records;
        let Some(r) = records.get(k) else {
            return fail(SfStatus::InvalidArgument, format!("record {k} out of range"));
        };
        *record = SfStepRecord {
            step: r.step as u64,
            t: r.t,
            energy: r.energy,
            modulus_g: r.modulus_g,
            mean: r.mean,
            dist_to_mean: r.dist_to_mean,
            dissipation: r.dissipation,
            xi_bound: r.xi_bound,
            inclusion_gap: r.inclusion_gap,
        };
        SfStatus::Ok
    })
}

/// Copies the last state into `out`.
///
/// # Safety
/// `ev` must be live; `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn sf_evolution_final_state(ev: *const SfEvolution, out: *mut f64, capacity: usize) -> SfStatus {
    guard(|| {
        if ev.is_null() {
            return fail(SfStatus::NullPointer, "null evolution");
        }
        copy_out((*ev).0.final_state.values(), out, capacity)
    })
}

/// First time `‖u - ū‖` fell below the extinction tolerance; returns
/// [`SfStatus::NotExtinct`] if it never did.
///
/// # Safety
/// `ev` must be live; `t` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_evolution_extinction_time(ev: *const SfEvolution, t: *mut f64) -> SfStatus {
    guard(|| {
        if ev.is_null() || t.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        match (*ev).0.summary.extinction_time {
            Some(v) => {
                *t = v;
                SfStatus::Ok
            }
            None => fail(SfStatus::NotExtinct, "no extinction within the horizon"),
        }
    })
}

/// The bound `C_p‖u_0 - ū‖/α`; [`SfStatus::NotApplicable`] when `α = 0`.
///
/// # Safety
/// `ev` must be live; `bound` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_evolution_extinction_bound(ev: *const SfEvolution, bound: *mut f64) -> SfStatus {
    guard(|| {
        if ev.is_null() || bound.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let s = &(*ev).0.summary;
        match parabolic::extinction_report(s, &s.w) {
            Ok(r) => {
                *bound = r.t_ext_bound;
                SfStatus::Ok
            }
            Err(e) => fail(SfStatus::NotApplicable, e),
        }
    })
}

/// # Safety
/// `ev` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_evolution_free(ev: *mut SfEvolution) {
    free_handle(ev)
}

// ---------------------------------------------------------------- orlicz

/// Opaque modulus `Φ`.
pub struct SfOrlicz(OrliczPhi);

/// Builds `Φ` from gradient samples with quadrature weight `dx`, using
/// `levels` budgets `2^{-k}` and the default shift radius.
///
/// # Safety
/// `samples` must point to `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_orlicz_build(
    samples: *const f64,
    len: usize,
    dx: f64,
    levels: usize,
    out: *mut *mut SfOrlicz,
) -> SfStatus {
    guard(|| {
        let Some(s) = slice(samples, len) else {
            return fail(SfStatus::NullPointer, "null samples");
        };
        if out.is_null() {
            return fail(SfStatus::NullPointer, "null output");
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return fail(SfStatus::InvalidArgument, format!("dx must be positive, got {dx}"));
        }
        match orlicz::build_phi_from_samples(s, dx, &orlicz::default_budget(levels), orlicz::DEFAULT_DELTA) {
            Ok(phi) => store(out, SfOrlicz(phi)),
            Err(e) => fail(SfStatus::InvalidArgument, e),
        }
    })
}

/// `Φ(p)`.
///
/// # Safety
/// `phi` must be live; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_orlicz_eval(phi: *const SfOrlicz, p: f64, value: *mut f64) -> SfStatus {
    guard(|| {
        if phi.is_null() || value.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        *value = (*phi).0.eval(p);
        SfStatus::Ok
    })
}

/// `G = dx·Σ Φ(g_i)`.
///
/// # Safety
/// `phi` must be live; `samples` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn sf_orlicz_modulus(
    phi: *const SfOrlicz,
    samples: *const f64,
    len: usize,
    dx: f64,
    value: *mut f64,
) -> SfStatus {
    guard(|| {
        let Some(s) = slice(samples, len) else {
            return fail(SfStatus::NullPointer, "null samples");
        };
        if phi.is_null() || value.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        *value = orlicz::modulus_of_samples(&(*phi).0, s, dx);
        SfStatus::Ok
    })
}

/// JSON record `{levels, slopes, delta}`; release with [`sf_string_free`].
///
/// # Safety
/// `phi` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_orlicz_to_json(phi: *const SfOrlicz, out: *mut *mut c_char) -> SfStatus {
    guard(|| {
        if phi.is_null() || out.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let s = CString::new((*phi).0.to_json()).expect("JSON has no NUL");
        *out = s.into_raw();
        SfStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `phi` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_orlicz_free(phi: *mut SfOrlicz) {
    free_handle(phi)
}

// ---------------------------------------------------------------- verify

/// Re-runs the checks on a stored `report.json` or run directory and sets
/// `passed` to whether every applicable verdict holds.
///
/// # Safety
/// `path` must be a NUL-terminated string; `passed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_verify_report_json(path: *const c_char, passed: *mut bool) -> SfStatus {
    guard(|| {
        if path.is_null() || passed.is_null() {
            return fail(SfStatus::NullPointer, "null argument");
        }
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            return fail(SfStatus::InvalidArgument, "path is not UTF-8");
        };
        match scenario::verify(Path::new(p)) {
            Ok(outcomes) => {
                *passed = outcomes.iter().all(|o| all_passed(&o.verdicts));
                SfStatus::Ok
            }
            Err(e) => fail(SfStatus::Io, e),
        }
    })
}
