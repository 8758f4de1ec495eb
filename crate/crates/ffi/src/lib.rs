//! C ABI over `schelling-core`.
//!
//! Every fallible function returns a [`SchellingStatus`]; on failure the
//! message is available from [`schelling_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use schelling_core::analysis::{persistence_margin, MarginOptions};
use schelling_core::bounds::{binom_tail, node_bias_probabilities, rational_to_f64, TailValue};
use schelling_core::dynamics::{DynamicsState, Event};
use schelling_core::fpp::{FppInstance, WeightDistribution};
use schelling_core::lattice::{create_torus, Init};
use schelling_core::{Coord, Error, SchellingParams, TorusGrid};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchellingStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidSpin = 4,
    BoundaryContact = 5,
    Hypothesis = 6,
    Budget = 7,
    Io = 8,
    Parse = 9,
    Internal = 10,
    Panic = 11,
}

impl From<&Error> for SchellingStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => SchellingStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => SchellingStatus::DimensionMismatch,
            Error::InvalidSpin { .. } => SchellingStatus::InvalidSpin,
            Error::BoundaryContact { .. } => SchellingStatus::BoundaryContact,
            Error::Hypothesis(_) => SchellingStatus::Hypothesis,
            Error::Budget(_) => SchellingStatus::Budget,
            Error::Io { .. } => SchellingStatus::Io,
            Error::Parse(_) => SchellingStatus::Parse,
            _ => SchellingStatus::Internal,
        }
    }
}

/// Weight law for first-passage percolation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchellingWeightKind {
    /// Constant weight `param`.
    Deterministic = 0,
    /// Exponential with mean `param`.
    Exponential = 1,
    /// Sum of `param` exponentials with rates `param, param-1, ..., 1`.
    CouponCollector = 2,
}

/// Simulation handle.
pub struct SchellingSim {
    state: DynamicsState,
}

/// First-passage handle.
pub struct SchellingFpp {
    inner: FppInstance,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SchellingFlip {
    pub time: f64,
    pub row: usize,
    pub col: usize,
    pub new_spin: i8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SchellingAbsorption {
    pub absorption_time: f64,
    pub total_flips: u64,
    /// Nonzero when the event cap stopped the run.
    pub truncated: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SchellingNodeBias {
    pub p_eps_biased: f64,
    pub p_unhappy: f64,
    pub p_viral: f64,
    /// NaN when the node can never be biased.
    pub p_viral_given_biased: f64,
    pub ln_viral_given_biased: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SchellingMargin {
    pub min_inside_count: u64,
    pub required: f64,
    pub pass: bool,
    pub nodes_checked: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SchellingStatus, msg: impl Into<String>) -> SchellingStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SchellingStatus {
    let s = SchellingStatus::from(&e);
    set_error(e.to_string());
    s
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), SchellingStatus>) -> SchellingStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SchellingStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SchellingStatus::Panic, msg)
        }
    }
}

fn check<T>(r: schelling_core::Result<T>) -> Result<T, SchellingStatus> {
    r.map_err(from_error)
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, SchellingStatus> {
    p.as_ref().ok_or_else(|| fail(SchellingStatus::NullPointer, "null handle"))
}

unsafe fn deref_mut<'a, T>(p: *mut T) -> Result<&'a mut T, SchellingStatus> {
    p.as_mut().ok_or_else(|| fail(SchellingStatus::NullPointer, "null pointer"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, SchellingStatus> {
    if p.is_null() {
        return Err(fail(SchellingStatus::NullPointer, "null path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SchellingStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn coord(n: usize, row: usize, col: usize) -> Result<Coord, SchellingStatus> {
    if row >= n || col >= n {
        return Err(fail(
            SchellingStatus::InvalidArgument,
            format!("({row}, {col}) is outside the {n}x{n} grid"),
        ));
    }
    Ok(Coord::new(row, col))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn schelling_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn schelling_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Simulation

/// Torus with i.i.d. uniform spins drawn from `seed`.
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_new(
    n: usize,
    w: usize,
    tau: f64,
    seed: u64,
    out: *mut *mut SchellingSim,
) -> SchellingStatus {
    guard(|| {
        let out = deref_mut(out)?;
        let params = check(SchellingParams::new(n, w, tau, seed))?;
        let grid = check(create_torus(&params, Init::UniformRandom))?;
        let state = check(DynamicsState::new(params, grid))?;
        *out = Box::into_raw(Box::new(SchellingSim { state }));
        Ok(())
    })
}

/// Torus from `n * n` row-major spins in `{-1, +1}`.
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_from_spins(
    n: usize,
    w: usize,
    tau: f64,
    seed: u64,
    spins: *const i8,
    len: usize,
    out: *mut *mut SchellingSim,
) -> SchellingStatus {
    guard(|| {
        let out = deref_mut(out)?;
        if spins.is_null() {
            return Err(fail(SchellingStatus::NullPointer, "null spin buffer"));
        }
        let params = check(SchellingParams::new(n, w, tau, seed))?;
        let v = std::slice::from_raw_parts(spins, len).to_vec();
        let grid = check(TorusGrid::from_spins(n, w, v))?;
        let state = check(DynamicsState::new(params, grid))?;
        *out = Box::into_raw(Box::new(SchellingSim { state }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_free(sim: *mut SchellingSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// One event. `flipped` is set false when the state was already absorbed.
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_step(
    sim: *mut SchellingSim,
    flip: *mut SchellingFlip,
    flipped: *mut bool,
) -> SchellingStatus {
    guard(|| {
        let sim = deref_mut(sim)?;
        let flipped = deref_mut(flipped)?;
        match sim.state.step() {
            Event::Flip(r) => {
                *flipped = true;
                if let Some(f) = flip.as_mut() {
                    *f = SchellingFlip { time: r.time, row: r.at.row, col: r.at.col, new_spin: r.new_spin };
                }
            }
            Event::Absorbed => *flipped = false,
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_run_until_absorbed(
    sim: *mut SchellingSim,
    max_events: u64,
    out: *mut SchellingAbsorption,
) -> SchellingStatus {
    guard(|| {
        let sim = deref_mut(sim)?;
        let r = sim.state.run_until_absorbed(max_events);
        if let Some(o) = out.as_mut() {
            *o = SchellingAbsorption {
                absorption_time: r.absorption_time,
                total_flips: r.total_flips,
                truncated: r.truncated,
            };
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_run_until_time(sim: *mut SchellingSim, t_stop: f64) -> SchellingStatus {
    guard(|| {
        let sim = deref_mut(sim)?;
        if t_stop.is_nan() {
            return Err(fail(SchellingStatus::InvalidArgument, "stop time is NaN"));
        }
        sim.state.run_until_time(t_stop);
        Ok(())
    })
}

/// Records every flip for [`schelling_sim_write_flip_log`].
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_set_logging(sim: *mut SchellingSim, on: bool) -> SchellingStatus {
    guard(|| {
        deref_mut(sim)?.state.set_logging(on);
        Ok(())
    })
}

/// Side length, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_n(sim: *const SchellingSim) -> usize {
    sim.as_ref().map_or(0, |s| s.state.grid().n())
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_time(sim: *const SchellingSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.time())
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_flips(sim: *const SchellingSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.state.flips())
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_unhappy_count(sim: *const SchellingSim) -> usize {
    sim.as_ref().map_or(0, |s| s.state.unhappy_count())
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_is_absorbed(sim: *const SchellingSim) -> bool {
    sim.as_ref().is_some_and(|s| s.state.is_absorbed())
}

/// Copies the `n * n` row-major spins into `buf`.
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_copy_spins(sim: *const SchellingSim, buf: *mut i8, len: usize) -> SchellingStatus {
    guard(|| {
        let sim = deref(sim)?;
        let spins = sim.state.grid().spins();
        if buf.is_null() {
            return Err(fail(SchellingStatus::NullPointer, "null spin buffer"));
        }
        if len != spins.len() {
            return Err(fail(
                SchellingStatus::DimensionMismatch,
                format!("buffer holds {len} spins, grid has {}", spins.len()),
            ));
        }
        ptr::copy_nonoverlapping(spins.as_ptr(), buf, len);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_bias(sim: *const SchellingSim, row: usize, col: usize, out: *mut i64) -> SchellingStatus {
    guard(|| {
        let sim = deref(sim)?;
        let c = coord(sim.state.grid().n(), row, col)?;
        *deref_mut(out)? = sim.state.bias(c);
        Ok(())
    })
}

/// Largest `r` with `N_r(row, col)` monochromatic.
#[no_mangle]
pub unsafe extern "C" fn schelling_sim_mono_radius(
    sim: *const SchellingSim,
    row: usize,
    col: usize,
    out: *mut usize,
) -> SchellingStatus {
    guard(|| {
        let sim = deref(sim)?;
        let mut grid = sim.state.grid_snapshot();
        let c = coord(grid.n(), row, col)?;
        grid.rebuild_prefix();
        *deref_mut(out)? = grid.mono_radius_centered(c);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_write_pgm(sim: *const SchellingSim, path: *const c_char) -> SchellingStatus {
    guard(|| {
        let sim = deref(sim)?;
        let p = path_arg(path)?;
        check(sim.state.snapshot(p))
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_sim_write_flip_log(sim: *const SchellingSim, path: *const c_char) -> SchellingStatus {
    guard(|| {
        let sim = deref(sim)?;
        let p = path_arg(path)?;
        check(sim.state.write_flip_log(p))
    })
}

// ---------------------------------------------------------------------------
// First-passage percolation

/// Passage times from the center of a `size x size` grid of sampled weights.
#[no_mangle]
pub unsafe extern "C" fn schelling_fpp_new(
    kind: SchellingWeightKind,
    param: f64,
    size: usize,
    seed: u64,
    run_index: u64,
    out: *mut *mut SchellingFpp,
) -> SchellingStatus {
    guard(|| {
        let out = deref_mut(out)?;
        let dist = match kind {
            SchellingWeightKind::Deterministic => WeightDistribution::Deterministic(param),
            SchellingWeightKind::Exponential => WeightDistribution::Exponential { mean: param },
            SchellingWeightKind::CouponCollector => {
                if !(param >= 1.0 && param.fract() == 0.0 && param <= u32::MAX as f64) {
                    return Err(fail(SchellingStatus::InvalidArgument, "coupon-collector k must be a positive integer"));
                }
                WeightDistribution::CouponCollector { k: param as u32 }
            }
        };
        let inner = check(FppInstance::sampled(dist, size, seed, run_index, f64::INFINITY))?;
        *out = Box::into_raw(Box::new(SchellingFpp { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn schelling_fpp_free(fpp: *mut SchellingFpp) {
    if !fpp.is_null() {
        drop(Box::from_raw(fpp));
    }
}

#[no_mangle]
pub unsafe extern "C" fn schelling_fpp_size(fpp: *const SchellingFpp) -> usize {
    fpp.as_ref().map_or(0, |f| f.inner.size())
}

#[no_mangle]
pub unsafe extern "C" fn schelling_fpp_passage(fpp: *const SchellingFpp, row: usize, col: usize, out: *mut f64) -> SchellingStatus {
    guard(|| {
        let fpp = deref(fpp)?;
        let c = coord(fpp.inner.size(), row, col)?;
        *deref_mut(out)? = fpp.inner.passage_at(c);
        Ok(())
    })
}

/// Inner and outer L-infinity radii of the ball `B(t)`.
#[no_mangle]
pub unsafe extern "C" fn schelling_fpp_radii(
    fpp: *const SchellingFpp,
    t: f64,
    inner: *mut usize,
    outer: *mut usize,
) -> SchellingStatus {
    guard(|| {
        let fpp = deref(fpp)?;
        let (r, big_r) = check(fpp.inner.radii(t))?;
        *deref_mut(inner)? = r;
        *deref_mut(outer)? = big_r;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Probability bounds

#[no_mangle]
pub unsafe extern "C" fn schelling_node_bias(w: usize, eps: f64, out: *mut SchellingNodeBias) -> SchellingStatus {
    guard(|| {
        let out = deref_mut(out)?;
        if w == 0 || !(0.0..=1.0).contains(&eps) {
            return Err(fail(SchellingStatus::InvalidArgument, "need w >= 1 and eps in [0, 1]"));
        }
        let p = node_bias_probabilities(w, eps);
        *out = SchellingNodeBias {
            p_eps_biased: rational_to_f64(&p.p_eps_biased),
            p_unhappy: rational_to_f64(&p.p_unhappy),
            p_viral: rational_to_f64(&p.p_viral),
            p_viral_given_biased: p.p_viral_given_biased.as_ref().map_or(f64::NAN, rational_to_f64),
            ln_viral_given_biased: p.ln_viral_given_biased().unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// `ln P(X >= k)` for `X ~ Bin(n, 1/2)`. `rel_err` bounds the relative error
/// of `exp(ln_value)` and is 0 for exact evaluation.
#[no_mangle]
pub unsafe extern "C" fn schelling_binom_ln_upper_tail(
    n: u64,
    k: i64,
    ln_value: *mut f64,
    rel_err: *mut f64,
) -> SchellingStatus {
    guard(|| {
        let ln_out = deref_mut(ln_value)?;
        let tail = binom_tail(n, k);
        *ln_out = tail.ln();
        if let Some(e) = rel_err.as_mut() {
            *e = match tail.value {
                TailValue::Exact(_) => 0.0,
                TailValue::Log { rel_err, .. } => rel_err,
            };
        }
        Ok(())
    })
}

/// Worst-case inside count over the shell of the radius-`radius` disc.
#[no_mangle]
pub unsafe extern "C" fn schelling_persistence_margin(
    radius: u64,
    w: usize,
    eps: f64,
    out: *mut SchellingMargin,
) -> SchellingStatus {
    guard(|| {
        let out = deref_mut(out)?;
        let m = check(persistence_margin(radius, w, eps, MarginOptions::default()))?;
        *out = SchellingMargin {
            min_inside_count: m.min_inside_count,
            required: m.required,
            pass: m.pass,
            nodes_checked: m.nodes_checked,
        };
        Ok(())
    })
}
