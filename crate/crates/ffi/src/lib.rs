//! C ABI over the feedaudit model families and decision-robustness test.
//!
//! Every fallible call returns an [`FaStatus`]; on anything but `FA_STATUS_OK`
//! the calling thread's last error message is available from
//! [`fa_last_error_message`]. Families are opaque handles created from a JSON
//! descriptor and released with [`fa_family_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::{ptr, slice};

use feedaudit::audit::evaluate_pair;
use feedaudit::family::{Feed, ModelFamily, ParameterVector};
use feedaudit::stats::{chi_squared_quantile, AuditThreshold, Verdict};
use feedaudit::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Dimension = 3,
    ParameterDomain = 4,
    EmptyFeed = 5,
    OutOfSupport = 6,
    SingularInformation = 7,
    Range = 8,
    Shape = 9,
    Family = 10,
    Config = 11,
    Source = 12,
    Io = 13,
    BufferTooSmall = 14,
    Panic = 15,
}

impl From<&Error> for FaStatus {
    fn from(err: &Error) -> Self {
        match err.kind() {
            "dimension" => FaStatus::Dimension,
            "parameter-domain" => FaStatus::ParameterDomain,
            "empty-feed" => FaStatus::EmptyFeed,
            "out-of-support" => FaStatus::OutOfSupport,
            "singular-information" => FaStatus::SingularInformation,
            "range" => FaStatus::Range,
            "shape" => FaStatus::Shape,
            "family" => FaStatus::Family,
            "config" => FaStatus::Config,
            "source" => FaStatus::Source,
            _ => FaStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaVerdict {
    Pass = 0,
    Fail = 1,
}

impl From<Verdict> for FaVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => FaVerdict::Pass,
            Verdict::Fail => FaVerdict::Fail,
        }
    }
}

/// Opaque handle to a model family.
pub struct FaFamily(ModelFamily);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(FaStatus);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        set_last_error(err.to_string());
        Failure(FaStatus::from(&err))
    }
}

fn fail(status: FaStatus, message: &str) -> Failure {
    set_last_error(message);
    Failure(status)
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FaStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FaStatus::Ok,
        Ok(Err(Failure(status))) => status,
        Err(_) => {
            set_last_error("panic inside feedaudit");
            FaStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller guarantees non-null pointers are valid.
    unsafe { p.as_ref() }.ok_or_else(|| fail(FaStatus::NullPointer, &format!("{what} is null")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(FaStatus::NullPointer, &format!("{what} is null")));
    }
    // SAFETY: caller guarantees `p` points to `len` readable doubles.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn as_mut_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(fail(FaStatus::NullPointer, &format!("{what} is null")));
    }
    if len < need {
        return Err(fail(
            FaStatus::BufferTooSmall,
            &format!("{what} holds {len} values, need {need}"),
        ));
    }
    // SAFETY: caller guarantees `p` points to `len` writable doubles.
    Ok(unsafe { slice::from_raw_parts_mut(p, len) })
}

unsafe fn write<T>(p: *mut T, value: T) {
    if !p.is_null() {
        // SAFETY: caller guarantees non-null out-pointers are writable.
        unsafe { p.write(value) };
    }
}

/// Builds a family from a JSON descriptor such as
/// `{"id": "gaussian-mean-var"}` and stores the new handle in `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_family_from_json(json: *const c_char, out: *mut *mut FaFamily) -> FaStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(fail(FaStatus::NullPointer, "json or out is null"));
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| fail(FaStatus::InvalidUtf8, "descriptor is not valid UTF-8"))?;
        let family = ModelFamily::from_json(text)?;
        // SAFETY: checked non-null.
        unsafe { out.write(Box::into_raw(Box::new(FaFamily(family)))) };
        Ok(())
    })
}

/// Releases a handle from [`fa_family_from_json`]. Null is a no-op.
///
/// # Safety
/// `family` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fa_family_free(family: *mut FaFamily) {
    if !family.is_null() {
        // SAFETY: caller guarantees the handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(family) });
    }
}

/// Parameter dimension r, or 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fa_family_dimension(family: *const FaFamily) -> usize {
    // SAFETY: caller guarantees validity.
    unsafe { family.as_ref() }.map_or(0, |f| f.0.dimension())
}

/// Closed-form MLE of `items[0..m]`, written to `theta_out[0..r]`.
/// `boundary_out` may be null.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn fa_family_mle(
    family: *const FaFamily,
    items: *const f64,
    m: usize,
    theta_out: *mut f64,
    theta_len: usize,
    boundary_out: *mut bool,
) -> FaStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let family = &unsafe { as_ref(family, "family") }?.0;
        let items = unsafe { as_slice(items, m, "items") }?;
        let out = unsafe { as_mut_slice(theta_out, theta_len, family.dimension(), "theta_out") }?;
        let est = family.mle(&Feed::new(items.to_vec()))?;
        out[..est.theta.len()].copy_from_slice(est.theta.as_slice());
        unsafe { write(boundary_out, est.boundary) };
        Ok(())
    })
}

/// Fisher information at `theta[0..r]`, written row-major to `out[0..r*r]`.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn fa_family_fisher(
    family: *const FaFamily,
    theta: *const f64,
    r: usize,
    out: *mut f64,
    out_len: usize,
) -> FaStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let family = &unsafe { as_ref(family, "family") }?.0;
        let theta = unsafe { as_slice(theta, r, "theta") }?;
        let out = unsafe { as_mut_slice(out, out_len, r * r, "out") }?;
        let info = family.fisher_information(&family.parameter(theta.to_vec())?)?;
        out[..r * r].copy_from_slice(info.entries());
        Ok(())
    })
}

/// The `a`-quantile of the χ² distribution with `r` degrees of freedom.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_chi_squared_quantile(r: u32, a: f64, out: *mut f64) -> FaStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(FaStatus::NullPointer, "out is null"));
        }
        let q = chi_squared_quantile(r, a)?;
        // SAFETY: checked non-null.
        unsafe { out.write(q) };
        Ok(())
    })
}

/// The rejection threshold τ = (2/m)·χ²_r(1 − α).
///
/// # Safety
/// `tau_out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_audit_threshold(r: usize, m: usize, alpha: f64, tau_out: *mut f64) -> FaStatus {
    guard(|| {
        if tau_out.is_null() {
            return Err(fail(FaStatus::NullPointer, "tau_out is null"));
        }
        let threshold = AuditThreshold::new(r, m, alpha)?;
        // SAFETY: checked non-null.
        unsafe { tau_out.write(threshold.tau) };
        Ok(())
    })
}

/// Decision-robustness check of two feeds of length `m` at level `alpha`.
/// The two test statistics are written to `stat_prime` and
/// `stat_double_prime` when those are non-null.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn fa_decision_robustness_check(
    family: *const FaFamily,
    filtered: *const f64,
    baseline: *const f64,
    m: usize,
    alpha: f64,
    verdict_out: *mut FaVerdict,
    stat_prime: *mut f64,
    stat_double_prime: *mut f64,
) -> FaStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let family = &unsafe { as_ref(family, "family") }?.0;
        let filtered = unsafe { as_slice(filtered, m, "filtered") }?;
        let baseline = unsafe { as_slice(baseline, m, "baseline") }?;
        if verdict_out.is_null() {
            return Err(fail(FaStatus::NullPointer, "verdict_out is null"));
        }
        let threshold = AuditThreshold::new(family.dimension(), m, alpha)?;
        let eval = evaluate_pair(
            family,
            &Feed::new(filtered.to_vec()),
            &Feed::new(baseline.to_vec()),
            &threshold,
        )?;
        unsafe {
            verdict_out.write(eval.verdict.into());
            write(stat_prime, eval.statistics.stat_prime);
            write(stat_double_prime, eval.statistics.stat_double_prime);
        }
        Ok(())
    })
}

/// Wald statistic (θ₁ − θ₂)ᵀ I(θ_at) (θ₁ − θ₂) for three points of dimension r.
///
/// # Safety
/// Pointers must be valid for `r` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_wald_statistic(
    family: *const FaFamily,
    theta1: *const f64,
    theta2: *const f64,
    theta_at: *const f64,
    r: usize,
    out: *mut f64,
) -> FaStatus {
    guard(|| {
        // SAFETY: forwarded caller guarantees.
        let family = &unsafe { as_ref(family, "family") }?.0;
        let t1 = unsafe { as_slice(theta1, r, "theta1") }?;
        let t2 = unsafe { as_slice(theta2, r, "theta2") }?;
        let at = unsafe { as_slice(theta_at, r, "theta_at") }?;
        if out.is_null() {
            return Err(fail(FaStatus::NullPointer, "out is null"));
        }
        let info = family.fisher_information(&family.parameter(at.to_vec())?)?;
        let diff = ParameterVector::new(t1.to_vec()).difference(&ParameterVector::new(t2.to_vec()))?;
        let value = info.quadratic_form(&diff)?;
        // SAFETY: checked non-null.
        unsafe { out.write(value) };
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The string is
/// owned by the caller and must be released with [`fa_string_free`].
#[no_mangle]
pub extern "C" fn fa_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().clone().map_or(ptr::null_mut(), CString::into_raw))
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string from [`fa_last_error_message`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fa_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: caller guarantees provenance.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
