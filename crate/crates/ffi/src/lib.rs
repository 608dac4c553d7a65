//! C interface to `lro-core`.
//!
//! A fit is created with [`lro_fit_new`] and released with [`lro_fit_free`].
//! Every fallible function returns an [`LroStatus`]; on failure a message is
//! available from [`lro_last_error_message`] until the next call on the same
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lro_core::inference::{interval, split_ci, split_fit, CiMethod, InferenceConfig};
use lro_core::{fit_lro, LroError, LroFit, TwoSample};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LroStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// No `x` observation lies below a `y` observation.
    DegenerateOrder = 3,
    Domain = 4,
    /// A variance or nuisance estimate is undefined at the point.
    Undefined = 5,
    UnsupportedPoint = 6,
    MissingQuantile = 7,
    BufferTooSmall = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

/// Interval methods available through [`lro_fit_ci`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LroCiMethod {
    DiscreteWald = 0,
    ThetaWald = 1,
    MuWaldTransformed = 2,
    Lrt = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LroInterval {
    pub z: f64,
    pub estimate: f64,
    pub lower: f64,
    /// May be `+inf`.
    pub upper: f64,
    pub level: f64,
}

/// Opaque fitted model.
pub struct LroFitHandle {
    sample: TwoSample,
    fit: LroFit,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &LroError) -> LroStatus {
    match e {
        LroError::DegenerateOrder { .. } => LroStatus::DegenerateOrder,
        LroError::Domain { .. } => LroStatus::Domain,
        LroError::UndefinedVariance(_) | LroError::UndefinedNuisance { .. } => LroStatus::Undefined,
        LroError::UnsupportedPoint { .. } => LroStatus::UnsupportedPoint,
        LroError::MissingQuantile(..) => LroStatus::MissingQuantile,
        _ => LroStatus::InvalidInput,
    }
}

fn guard<F: FnOnce() -> Result<(), (LroStatus, String)>>(f: F) -> LroStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LroStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            LroStatus::Internal
        }
    }
}

fn lift<T>(r: lro_core::Result<T>) -> Result<T, (LroStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (LroStatus, String) {
    (LroStatus::NullPointer, format!("{name} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], (LroStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a>(h: *const LroFitHandle) -> Result<&'a LroFitHandle, (LroStatus, String)> {
    h.as_ref().ok_or_else(|| null("fit"))
}

/// Fits the model to `x[0..nx]` and `y[0..ny]` and stores a new handle in
/// `*out`. The handle must be released with [`lro_fit_free`].
///
/// # Safety
/// `x` and `y` must point to `nx` and `ny` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_new(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    out: *mut *mut LroFitHandle,
) -> LroStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sample = lift(TwoSample::new(slice(x, nx, "x")?.to_vec(), slice(y, ny, "y")?.to_vec()))?;
        let fit = lift(fit_lro(&sample))?;
        *out = Box::into_raw(Box::new(LroFitHandle { sample, fit }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `fit` must come from [`lro_fit_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_free(fit: *mut LroFitHandle) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Density ratio estimate `theta*(z)`; may be `+inf`.
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_theta(fit: *const LroFitHandle, z: f64, out: *mut f64) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        *out.as_mut().ok_or_else(|| null("out"))? = h.fit.theta(z);
        Ok(())
    })
}

/// Fitted distribution function `F*(z)` of the first sample.
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_f_star(fit: *const LroFitHandle, z: f64, out: *mut f64) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        *out.as_mut().ok_or_else(|| null("out"))? = h.fit.f_star().cdf(z);
        Ok(())
    })
}

/// Fitted distribution function `G*(z)` of the second sample.
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_g_star(fit: *const LroFitHandle, z: f64, out: *mut f64) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        *out.as_mut().ok_or_else(|| null("out"))? = h.fit.g_star().cdf(z);
        Ok(())
    })
}

/// Fraction of observations in the first sample.
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_pi_n(fit: *const LroFitHandle, out: *mut f64) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        *out.as_mut().ok_or_else(|| null("out"))? = h.fit.pi_n();
        Ok(())
    })
}

/// Copies the step representation of `theta*`: `levels[i]` holds on
/// `(breakpoints[i-1], breakpoints[i]]`. `*n_levels` receives the number of
/// levels; there is one breakpoint fewer. With `capacity` below the level
/// count nothing is copied and `BufferTooSmall` is returned, so a call with
/// `capacity = 0` queries the size.
///
/// # Safety
/// `breakpoints` and `levels` must have room for `capacity - 1` and
/// `capacity` doubles; `n_levels` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_theta_steps(
    fit: *const LroFitHandle,
    breakpoints: *mut f64,
    levels: *mut f64,
    capacity: usize,
    n_levels: *mut usize,
) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        let t = h.fit.theta_star();
        let count = t.levels().len();
        *n_levels.as_mut().ok_or_else(|| null("n_levels"))? = count;
        if capacity < count {
            return Err((
                LroStatus::BufferTooSmall,
                format!("{count} levels do not fit in {capacity}"),
            ));
        }
        if levels.is_null() || (count > 1 && breakpoints.is_null()) {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(t.levels().as_ptr(), levels, count);
        if count > 1 {
            ptr::copy_nonoverlapping(t.breakpoints().as_ptr(), breakpoints, count - 1);
        }
        Ok(())
    })
}

fn to_interval(ci: &lro_core::inference::IntervalEstimate) -> LroInterval {
    LroInterval {
        z: ci.z,
        estimate: ci.estimate,
        lower: ci.lower,
        upper: ci.upper,
        level: ci.level,
    }
}

/// Confidence interval for `theta(z)` with default tuning constants.
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_ci(
    fit: *const LroFitHandle,
    method: LroCiMethod,
    z: f64,
    level: f64,
    out: *mut LroInterval,
) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = match method {
            LroCiMethod::DiscreteWald => CiMethod::DiscreteWald,
            LroCiMethod::ThetaWald => CiMethod::ThetaWald,
            LroCiMethod::MuWaldTransformed => CiMethod::MuWaldTransformed,
            LroCiMethod::Lrt => CiMethod::Lrt,
        };
        let ci = lift(interval(&h.fit, z, level, m, &InferenceConfig::default()))?;
        *out = to_interval(&ci);
        Ok(())
    })
}

/// Sample-splitting interval from `m` random subsamples drawn with `seed`.
///
/// # Safety
/// `fit` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lro_fit_split_ci(
    fit: *const LroFitHandle,
    z: f64,
    level: f64,
    m: usize,
    seed: u64,
    out: *mut LroInterval,
) -> LroStatus {
    guard(|| {
        let h = handle(fit)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let se = lift(split_fit(&h.sample, z, m, seed))?;
        *out = to_interval(&lift(split_ci(&se, level))?);
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lro_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lro_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
