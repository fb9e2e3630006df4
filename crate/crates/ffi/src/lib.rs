//! C ABI for mpost.
//!
//! Every fallible function returns an [`MpostStatus`]. On failure the message
//! is available from [`mpost_last_error_message`] on the same thread until the
//! next failing call. Buffers are owned by the caller; lengths are element
//! counts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mpost::estimators::estimate_moments;
use mpost::models::{Family, FamilyOptions, PredictiveModel};
use mpost::resampler::{batch_sample, tail_weight, ResampleConfig, SamplerMode, Temper};
use mpost::stats::credible_interval;
use mpost::{Error, ErrorCategory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpostStatus {
    Ok = 0,
    Usage = 2,
    Data = 3,
    Model = 4,
    Numerical = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpostMode {
    Exact = 0,
    Truncated = 1,
    Hybrid = 2,
}

/// Opaque handle to an iid predictive model.
pub struct MpostModel {
    family: Family,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MpostStatus, msg: impl Into<String>) -> MpostStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> MpostStatus {
    let status = match e.category() {
        ErrorCategory::Usage => MpostStatus::Usage,
        ErrorCategory::Data => MpostStatus::Data,
        ErrorCategory::Model => MpostStatus::Model,
        ErrorCategory::Numerical => MpostStatus::Numerical,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> MpostStatus) -> MpostStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(MpostStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mpost_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a model by family name. `nu` is used by student_t, `sigma2` by
/// normal_mean and `dim` by mvnormal (0 means 2); the others ignore them.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpost_model_new(
    name: *const c_char,
    nu: f64,
    sigma2: f64,
    dim: usize,
    out: *mut *mut MpostModel,
) -> MpostStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(MpostStatus::Usage, "model name is not UTF-8");
        };
        let dim = if dim == 0 { FamilyOptions::default().dim } else { dim };
        let opts = FamilyOptions { nu, sigma2, dim };
        match Family::from_name(name, opts) {
            Ok(family) => {
                *out = Box::into_raw(Box::new(MpostModel { family }));
                MpostStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `model` must come from [`mpost_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpost_model_free(model: *mut MpostModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Parameter dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mpost_model_dim(model: *const MpostModel) -> usize {
    model.as_ref().map_or(0, |m| m.family.dim())
}

/// Moment estimate from `len` flat observations into `theta` (`theta_len`
/// must equal the model dimension).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn mpost_estimate(
    model: *const MpostModel,
    data: *const f64,
    len: usize,
    theta: *mut f64,
    theta_len: usize,
) -> MpostStatus {
    guard(|| {
        let (Some(m), Some(data)) = (model.as_ref(), slice(data, len)) else {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        };
        if theta.is_null() {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        }
        if theta_len != m.family.dim() {
            return fail(MpostStatus::Usage, format!("theta_len must be {}", m.family.dim()));
        }
        match estimate_moments(&m.family, data) {
            Ok(est) => {
                std::slice::from_raw_parts_mut(theta, theta_len).copy_from_slice(&est);
                MpostStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Draws `draws` posterior samples from the chain started at `theta_n` after
/// `n` observations. `extra` is the truncation offset for truncated and hybrid
/// modes and the stopping offset for exact mode; 0 selects the default.
/// `threads` of 0 uses the global pool. Output is row-major, `draws × dim`.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn mpost_sample(
    model: *const MpostModel,
    theta_n: *const f64,
    theta_len: usize,
    n: usize,
    mode: MpostMode,
    extra: usize,
    draws: usize,
    temper: f64,
    seed: u64,
    threads: usize,
    out: *mut f64,
    out_len: usize,
) -> MpostStatus {
    guard(|| {
        let (Some(m), Some(theta)) = (model.as_ref(), slice(theta_n, theta_len)) else {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        };
        if out.is_null() {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        }
        let dim = m.family.dim();
        if theta_len != dim || out_len != draws.saturating_mul(dim) {
            return fail(MpostStatus::Usage, format!("need theta_len = {dim} and out_len = draws × {dim}"));
        }
        let mode = match mode {
            MpostMode::Exact => SamplerMode::Exact,
            MpostMode::Truncated => SamplerMode::Truncated,
            MpostMode::Hybrid => SamplerMode::Hybrid,
        };
        let mut cfg = ResampleConfig::new(mode, n, dim, draws, seed)
            .with_temper(Temper::Scalar(temper))
            .with_threads((threads > 0).then_some(threads));
        if extra > 0 {
            cfg = match mode {
                SamplerMode::Exact => cfg.with_exact_extra(n, extra),
                _ => cfg.with_trunc_extra(n, extra),
            };
        }
        match batch_sample(&m.family, theta, n, &cfg) {
            Ok(d) => {
                std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&d.values);
                MpostStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `Σ_{i>n} i⁻²`, or NaN for `n = 0`.
#[no_mangle]
pub extern "C" fn mpost_tail_weight(n: usize) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        tail_weight(n).r_sq
    }
}

/// Equal-tailed credible interval of one column of draws.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn mpost_credible_interval(
    draws: *const f64,
    len: usize,
    level: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> MpostStatus {
    guard(|| {
        let Some(d) = slice(draws, len) else {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        };
        if lower.is_null() || upper.is_null() {
            return fail(MpostStatus::NullPointer, "null pointer argument");
        }
        match credible_interval(d, level) {
            Ok(ci) => {
                *lower = ci.lower;
                *upper = ci.upper;
                MpostStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
