// SPDX-License-Identifier: Apache-2.0

//! C ABI over `hofa`.
//!
//! Every entry point returns a [`HofaStatus`]. On failure the message is kept
//! per thread and read back with [`hofa_last_error`]. Handles are opaque and
//! owned by the caller until passed to the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hofa::arith::{self, FactorSieve, FunctionTable, MultiplicativeSpec};
use hofa::error::Error;
use hofa::gowers;
use hofa::parreg::{self, QuadraticForm3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HofaStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfRange = 2,
    EmptyDomain = 3,
    InsufficientRange = 4,
    Overflow = 5,
    NotEligible = 6,
    SizeLimit = 7,
    Parse = 8,
    Internal = 9,
    NullPointer = 10,
    InvalidUtf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<&Error> for HofaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Self::InvalidArgument,
            Error::OutOfRange(_) => Self::OutOfRange,
            Error::EmptyDomain(_) => Self::EmptyDomain,
            Error::InsufficientRange(_) => Self::InsufficientRange,
            Error::Overflow(_) => Self::Overflow,
            Error::NotEligible(_) => Self::NotEligible,
            Error::SizeLimit(_) => Self::SizeLimit,
            Error::Parse(_) => Self::Parse,
            Error::Internal(_) => Self::Internal,
        }
    }
}

/// Parsed multiplicative function.
pub struct HofaSpec(MultiplicativeSpec);

/// Values `f(1), ..., f(N)`.
pub struct HofaTable(FunctionTable);

/// `x = k l0 (m + l1 n)(m + l2 n)`, `y = sign_y k l0 (m + l3 n)(m + l4 n)`,
/// `lambda = k (lambda[0] m^2 + lambda[1] m n + lambda[2] n^2)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HofaFamily {
    pub ell: [i64; 5],
    pub sign_y: i8,
    pub lambda: [i64; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

struct Failure(HofaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(HofaStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HofaStatus::NullPointer, format!("{what} is null"))
}

// Runs `body`, recording any error or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HofaStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HofaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            HofaStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if text.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|e| Failure(HofaStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn read_form(coeffs: *const i64) -> Result<QuadraticForm3, Failure> {
    if coeffs.is_null() {
        return Err(null("coeffs"));
    }
    let c = std::slice::from_raw_parts(coeffs, 6);
    Ok(QuadraticForm3::new(c[0], c[1], c[2], c[3], c[4], c[5]))
}

/// Message for the last failing call on this thread, or null after a
/// successful one. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn hofa_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hofa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a spec string such as `liouville` or `chi:4:1`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hofa_spec_parse(text: *const c_char, out: *mut *mut HofaSpec) -> HofaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: MultiplicativeSpec = read_str(text, "text")?.parse()?;
        *out = Box::into_raw(Box::new(HofaSpec(spec)));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from [`hofa_spec_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hofa_spec_free(spec: *mut HofaSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Tabulate `spec` on `[1, n]`.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hofa_table_new(spec: *const HofaSpec, n: usize, out: *mut *mut HofaTable) -> HofaStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sieve = FactorSieve::new(n.max(2))?;
        let table = arith::tabulate(&spec.0, n, &sieve)?;
        *out = Box::into_raw(Box::new(HofaTable(table)));
        Ok(())
    })
}

/// Build a table from `n` real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn hofa_table_from_values(
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut *mut HofaTable,
) -> HofaStatus {
    guard(|| {
        if re.is_null() || im.is_null() || out.is_null() {
            return Err(null("re, im or out"));
        }
        let re = std::slice::from_raw_parts(re, n);
        let im = std::slice::from_raw_parts(im, n);
        let values = re.iter().zip(im).map(|(&r, &i)| num_complex::Complex64::new(r, i)).collect();
        let table = FunctionTable::from_values(values)?;
        *out = Box::into_raw(Box::new(HofaTable(table)));
        Ok(())
    })
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hofa_table_len(table: *const HofaTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

/// Copy the values into `re` and `im`, which hold `cap` doubles each.
///
/// # Safety
/// `table` must be a live handle; `re` and `im` must have room for `cap`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn hofa_table_values(
    table: *const HofaTable,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> HofaStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        if re.is_null() || im.is_null() {
            return Err(null("re or im"));
        }
        let values = table.0.values();
        if cap < values.len() {
            return Err(Failure(
                HofaStatus::BufferTooSmall,
                format!("need {} entries, got {cap}", values.len()),
            ));
        }
        for (i, v) in values.iter().enumerate() {
            *re.add(i) = v.re;
            *im.add(i) = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hofa_table_free(table: *mut HofaTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// `||f||_{U^s[N]}` of the table. `nstar` of 0 picks the default modulus.
///
/// # Safety
/// `table` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hofa_gowers_norm(
    table: *const HofaTable,
    s: u32,
    nstar: usize,
    out: *mut f64,
) -> HofaStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let nstar = (nstar != 0).then_some(nstar);
        *out = gowers::gowers_norm_interval(table.0.values(), s, nstar)?;
        Ok(())
    })
}

/// Whether the form with coefficients `(a, b, c, d, e, f)` is eligible.
///
/// # Safety
/// `coeffs` must point to 6 readable integers and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hofa_form_is_eligible(coeffs: *const i64, out: *mut bool) -> HofaStatus {
    guard(|| {
        let form = read_form(coeffs)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = form.is_eligible();
        Ok(())
    })
}

/// Parametric family of solutions for an eligible form.
///
/// # Safety
/// `coeffs` must point to 6 readable integers and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hofa_form_parametrize(coeffs: *const i64, out: *mut HofaFamily) -> HofaStatus {
    guard(|| {
        let form = read_form(coeffs)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let fam = parreg::parametrize(&form)?;
        *out = HofaFamily { ell: fam.ell, sign_y: fam.sign_y, lambda: fam.lambda };
        Ok(())
    })
}
