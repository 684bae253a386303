//! C ABI for `mcac`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new` function and released with the matching `*_free`. Fallible calls
//! return an [`McacStatus`]; on failure the message is kept per thread and
//! can be copied out with [`mcac_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcac::dynamics::{MultiplierKind, SimState, Stepper};
use mcac::fronttrack::{average_curvature, step_flow_by, FlowState};
use mcac::geometry::{enclosed_area, Curve};
use mcac::grid::{integrate, Field, GridSpec};
use mcac::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    InvalidCurve = 4,
    TimeStepTooLarge = 5,
    Overshoot = 6,
    DegeneratePhase = 7,
    SolverDivergence = 8,
    SelfIntersection = 9,
    CurveTouchesBoundary = 10,
    EigSolverStall = 11,
    Solvability = 12,
    Config = 13,
    Format = 14,
    Io = 15,
    Panic = 16,
}

/// Constraint applied by the phase-field stepper.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McacMultiplier {
    Bb = 0,
    Rs = 1,
    None = 2,
}

impl From<McacMultiplier> for MultiplierKind {
    fn from(m: McacMultiplier) -> Self {
        match m {
            McacMultiplier::Bb => MultiplierKind::Bb,
            McacMultiplier::Rs => MultiplierKind::Rs,
            McacMultiplier::None => MultiplierKind::None,
        }
    }
}

/// Cell-centred field on a rectangular grid.
pub struct McacField(Field);

/// Closed polygon.
pub struct McacCurve(Curve);

/// Phase-field simulation state with its implicit solver.
pub struct McacSim {
    state: SimState,
    stepper: Stepper,
}

/// Area-preserving curve shortening flow.
pub struct McacFlow(FlowState);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> McacStatus {
    match e {
        Error::SolvabilityViolation { .. } => McacStatus::Solvability,
        Error::SolverDivergence { .. } => McacStatus::SolverDivergence,
        Error::DegeneratePhase { .. } => McacStatus::DegeneratePhase,
        Error::OvershootAbort { .. } => McacStatus::Overshoot,
        Error::TimeStepTooLarge { .. } => McacStatus::TimeStepTooLarge,
        Error::CurveTouchesBoundary { .. } => McacStatus::CurveTouchesBoundary,
        Error::InvalidCurve(_) => McacStatus::InvalidCurve,
        Error::SelfIntersection { .. } => McacStatus::SelfIntersection,
        Error::EigSolverStall { .. } => McacStatus::EigSolverStall,
        Error::InvalidGrid(_) => McacStatus::InvalidGrid,
        Error::InvalidArgument(_) => McacStatus::InvalidArgument,
        Error::Config { .. } => McacStatus::Config,
        Error::Format { .. } => McacStatus::Format,
        Error::Io(_) => McacStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> McacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McacStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            McacStatus::Panic
        }
    }
}

struct Failure(McacStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(McacStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let out = out.as_mut().ok_or_else(|| null("out"))?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(Failure(
            McacStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mcac_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates an `nx × ny` field on `[0, lx] × [0, ly]` from row-major values
/// (`x` fastest), `len == nx·ny`.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_field_new(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut McacField,
) -> McacStatus {
    guard(|| {
        let spec = GridSpec::new(nx, ny, lx, ly)?;
        let values = slice(values, len, "values")?.to_vec();
        put(out, McacField(Field::new(spec, values)?))
    })
}

/// # Safety
/// `field` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mcac_field_free(field: *mut McacField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of cells, or 0 for a null field.
///
/// # Safety
/// `field` must be null or a live field.
#[no_mangle]
pub unsafe extern "C" fn mcac_field_len(field: *const McacField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies the values into `out`, which must hold at least `mcac_field_len`.
///
/// # Safety
/// `field` must be a live field and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcac_field_values(field: *const McacField, out: *mut f64, len: usize) -> McacStatus {
    guard(|| copy_out(deref(field, "field")?.0.values(), out, len))
}

/// Midpoint-rule integral over the domain.
///
/// # Safety
/// `field` must be a live field and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_field_integral(field: *const McacField, out: *mut f64) -> McacStatus {
    guard(|| {
        let v = integrate(&deref(field, "field")?.0);
        *deref_mut(out, "out")? = v;
        Ok(())
    })
}

/// Creates a closed polygon from `n` interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must point to `2·n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_new(xy: *const f64, n: usize, out: *mut *mut McacCurve) -> McacStatus {
    guard(|| {
        let xy = slice(xy, 2 * n, "xy")?;
        let pts = xy.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        put(out, McacCurve(Curve::new(pts)?))
    })
}

/// Regular `n`-gon inscribed in the circle of radius `r` about `(cx, cy)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_circle(cx: f64, cy: f64, r: f64, n: usize, out: *mut *mut McacCurve) -> McacStatus {
    guard(|| put(out, McacCurve(Curve::circle([cx, cy], r, n)?)))
}

/// # Safety
/// `curve` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_free(curve: *mut McacCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Number of vertices, or 0 for a null curve.
///
/// # Safety
/// `curve` must be null or a live curve.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_len(curve: *const McacCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.len())
}

/// Copies the vertices as interleaved `x, y` pairs; `len` counts doubles.
///
/// # Safety
/// `curve` must be a live curve and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_points(curve: *const McacCurve, out: *mut f64, len: usize) -> McacStatus {
    guard(|| {
        let xy: Vec<f64> = deref(curve, "curve")?.0.points().iter().flatten().copied().collect();
        copy_out(&xy, out, len)
    })
}

/// Enclosed area (positive for counter-clockwise curves).
///
/// # Safety
/// `curve` must be a live curve and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_area(curve: *const McacCurve, out: *mut f64) -> McacStatus {
    guard(|| {
        let a = enclosed_area(&deref(curve, "curve")?.0);
        *deref_mut(out, "out")? = a;
        Ok(())
    })
}

/// Arclength-weighted mean curvature.
///
/// # Safety
/// `curve` must be a live curve and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_curve_mean_curvature(curve: *const McacCurve, out: *mut f64) -> McacStatus {
    guard(|| {
        let k = average_curvature(&deref(curve, "curve")?.0);
        *deref_mut(out, "out")? = k;
        Ok(())
    })
}

/// Starts a phase-field simulation from a copy of `u0`. `dt <= 0` picks
/// `0.1·eps²`.
///
/// # Safety
/// `u0` must be a live field and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_new(
    u0: *const McacField,
    eps: f64,
    dt: f64,
    multiplier: McacMultiplier,
    out: *mut *mut McacSim,
) -> McacStatus {
    guard(|| {
        let u = deref(u0, "u0")?.0.clone();
        let dt = if dt > 0.0 { dt } else { mcac::dynamics::default_dt(eps) };
        let state = SimState::new(u, eps, dt, multiplier.into())?;
        let stepper = Stepper::new(&state);
        put(out, McacSim { state, stepper })
    })
}

/// # Safety
/// `sim` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_free(sim: *mut McacSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `steps` time steps. On failure the state stays at the last
/// successful step.
///
/// # Safety
/// `sim` must be a live simulation.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_step(sim: *mut McacSim, steps: u64) -> McacStatus {
    guard(|| {
        let sim = deref_mut(sim, "sim")?;
        for _ in 0..steps {
            sim.state = sim.stepper.step(&sim.state)?;
        }
        Ok(())
    })
}

/// Current time, or NaN for a null simulation.
///
/// # Safety
/// `sim` must be null or a live simulation.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_time(sim: *const McacSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.time)
}

/// Current discrete mass `Σu·h²`, or NaN for a null simulation.
///
/// # Safety
/// `sim` must be null or a live simulation.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_mass(sim: *const McacSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.mass())
}

/// Multiplier used by the most recent step, or NaN for a null simulation.
///
/// # Safety
/// `sim` must be null or a live simulation.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_multiplier(sim: *const McacSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.lambda_last)
}

/// Copies the current field into a new handle owned by the caller.
///
/// # Safety
/// `sim` must be a live simulation and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_sim_field(sim: *const McacSim, out: *mut *mut McacField) -> McacStatus {
    guard(|| put(out, McacField(deref(sim, "sim")?.state.u.clone())))
}

/// Starts an area-preserving flow from a copy of `curve`. `dt <= 0` picks
/// half the stability limit of the curve.
///
/// # Safety
/// `curve` must be a live curve and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_flow_new(
    curve: *const McacCurve,
    dt: f64,
    projection: bool,
    out: *mut *mut McacFlow,
) -> McacStatus {
    guard(|| {
        let c = deref(curve, "curve")?.0.clone();
        let dt = if dt > 0.0 { dt } else { 0.5 * FlowState::stable_dt(&c) };
        put(out, McacFlow(FlowState::new(c, dt, projection)?))
    })
}

/// # Safety
/// `flow` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mcac_flow_free(flow: *mut McacFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Advances the flow until its time reaches `t`, shortening the last step to
/// land on it.
///
/// # Safety
/// `flow` must be a live flow.
#[no_mangle]
pub unsafe extern "C" fn mcac_flow_advance(flow: *mut McacFlow, t: f64) -> McacStatus {
    guard(|| {
        let flow = deref_mut(flow, "flow")?;
        if !t.is_finite() {
            return Err(Failure(McacStatus::InvalidArgument, format!("target time {t} is not finite")));
        }
        while flow.0.time < t {
            let dt = flow.0.dt.min(t - flow.0.time);
            flow.0 = step_flow_by(&flow.0, dt)?;
        }
        Ok(())
    })
}

/// Current flow time, or NaN for a null flow.
///
/// # Safety
/// `flow` must be null or a live flow.
#[no_mangle]
pub unsafe extern "C" fn mcac_flow_time(flow: *const McacFlow) -> f64 {
    flow.as_ref().map_or(f64::NAN, |f| f.0.time)
}

/// Copies the current curve into a new handle owned by the caller.
///
/// # Safety
/// `flow` must be a live flow and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcac_flow_curve(flow: *const McacFlow, out: *mut *mut McacCurve) -> McacStatus {
    guard(|| put(out, McacCurve(deref(flow, "flow")?.0.curve.clone())))
}
