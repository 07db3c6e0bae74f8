//! C interface: opaque handles for the constructed profile and the spectral tables, scalar
//! entry points for the scaling law, and integer status codes. The last error message of the
//! calling thread is available through `qb_last_error`.

use quintic_blowup::correction_two::{ProfileConfig, SecondCorrection};
use quintic_blowup::residual::e2_normalized;
use quintic_blowup::scaling::ScalingParams;
use quintic_blowup::spectral::{find_xi_d, SpectralConfig, SpectralData, ODE_TOL};
use quintic_blowup::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    Domain = 4,
    Panic = 5,
}

/// Constructed approximate solution u₂ for one parameter set.
pub struct QbProfile {
    inner: SecondCorrection,
}

/// Spectral tables of the linearized operator.
pub struct QbSpectral {
    inner: SpectralData,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut v = e.borrow_mut();
        v.clear();
        v.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(e: &Error) -> QbStatus {
    match e {
        Error::Validation(_) => QbStatus::Validation,
        Error::Domain(_) => QbStatus::Domain,
        Error::Numerical(_) | Error::Divergence(_) | Error::TruncationOverflow { .. } => QbStatus::Numerical,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> QbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QbStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            QbStatus::Panic
        }
    }
}

/// `out` is checked non-null by every caller.
fn write_out(out: *mut f64, v: f64) -> Result<(), Error> {
    // SAFETY: non-null and writable per the caller's contract.
    unsafe { *out = v };
    Ok(())
}

fn null_status(p: bool) -> Option<QbStatus> {
    if p {
        set_error("null pointer argument");
        Some(QbStatus::NullPointer)
    } else {
        None
    }
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qb_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(c) => c,
        Err(_) => c"unknown",
    };
    V.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length without the terminator.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: the caller guarantees `len` writable bytes at `buf`.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// λ(t) = t^(−1−ν) exp(−ε₀ sin log t).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_lambda(nu: f64, eps0: f64, t0: f64, t: f64, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(out.is_null()) {
        return s;
    }
    guard(|| write_out(out, ScalingParams::new(nu, eps0, t0)?.lambda_of(t)?))
}

/// τ(t) = ∫_t^{t₀} λ(s) ds.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_tau_of(nu: f64, eps0: f64, t0: f64, t: f64, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(out.is_null()) {
        return s;
    }
    guard(|| write_out(out, ScalingParams::new(nu, eps0, t0)?.tau_of(t)?))
}

/// Builds u₂ with default recursion settings. On success `*out` owns a handle that must be
/// released with `qb_profile_free`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_profile_new(nu: f64, eps0: f64, t0: f64, out: *mut *mut QbProfile) -> QbStatus {
    if let Some(s) = null_status(out.is_null()) {
        return s;
    }
    guard(|| {
        let p = ScalingParams::new(nu, eps0, t0)?;
        let inner = SecondCorrection::build(&p, &ProfileConfig::default())?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(QbProfile { inner })) };
        Ok(())
    })
}

/// Releases a profile handle; null is ignored.
///
/// # Safety
/// `h` must come from `qb_profile_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_profile_free(h: *mut QbProfile) {
    if !h.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// u₂(t, r) for 0 ≤ r ≤ t (inside the backward light cone).
///
/// # Safety
/// `h` must be a live handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_profile_u2(h: *const QbProfile, t: f64, r: f64, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(h.is_null() || out.is_null()) {
        return s;
    }
    // SAFETY: non-null live handle per the contract.
    let p = unsafe { &*h };
    guard(|| write_out(out, p.inner.u2(t, r)?))
}

/// Normalized cone error t²λ^(−1/2)e₂ at comoving radius R = λr ≤ μ.
///
/// # Safety
/// As for `qb_profile_u2`.
#[no_mangle]
pub unsafe extern "C" fn qb_profile_e2(h: *const QbProfile, t: f64, big_r: f64, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(h.is_null() || out.is_null()) {
        return s;
    }
    // SAFETY: non-null live handle per the contract.
    let p = unsafe { &*h };
    guard(|| write_out(out, e2_normalized(&p.inner, t, big_r)?))
}

/// Fitted growth constant C₀ of the level-`level` series (1 or 2).
///
/// # Safety
/// As for `qb_profile_u2`.
#[no_mangle]
pub unsafe extern "C" fn qb_profile_growth(h: *const QbProfile, level: u32, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(h.is_null() || out.is_null()) {
        return s;
    }
    // SAFETY: non-null live handle per the contract.
    let p = unsafe { &*h };
    guard(|| {
        let q = match level {
            1 | 2 => &p.inner.q[level as usize - 1],
            _ => return Err(Error::Validation(format!("level {level} not in {{1, 2}}"))),
        };
        write_out(out, q.growth().c0)
    })
}

/// The negative eigenvalue ξ_d of −∂_R² − 5W⁴ on the half line.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_xi_d(out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(out.is_null()) {
        return s;
    }
    guard(|| write_out(out, find_xi_d(ODE_TOL, 1.0, 250)?.xi_d))
}

/// Builds the spectral tables with default resolution (a few seconds).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_spectral_new(out: *mut *mut QbSpectral) -> QbStatus {
    if let Some(s) = null_status(out.is_null()) {
        return s;
    }
    guard(|| {
        let inner = SpectralData::build(&SpectralConfig::default())?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(QbSpectral { inner })) };
        Ok(())
    })
}

/// Releases a spectral handle; null is ignored.
///
/// # Safety
/// `h` must come from `qb_spectral_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_spectral_free(h: *mut QbSpectral) {
    if !h.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Spectral density ρ(ξ) for ξ > 0.
///
/// # Safety
/// `h` must be a live handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qb_spectral_density(h: *const QbSpectral, xi: f64, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(h.is_null() || out.is_null()) {
        return s;
    }
    // SAFETY: non-null live handle per the contract.
    let s = unsafe { &*h };
    guard(|| {
        if !(xi > 0.0) {
            return Err(Error::Domain(format!("density needs xi > 0, got {xi}")));
        }
        write_out(out, s.inner.rho_at(xi))
    })
}

/// ξ_d stored in a spectral handle.
///
/// # Safety
/// As for `qb_spectral_density`.
#[no_mangle]
pub unsafe extern "C" fn qb_spectral_xi_d(h: *const QbSpectral, out: *mut f64) -> QbStatus {
    if let Some(s) = null_status(h.is_null() || out.is_null()) {
        return s;
    }
    // SAFETY: non-null live handle per the contract.
    let s = unsafe { &*h };
    guard(|| write_out(out, s.inner.xi_d))
}
