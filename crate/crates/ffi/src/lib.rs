//! C ABI over `cwbench`.
//!
//! Every fallible function returns a [`CwStatus`] and writes its result through
//! an out-pointer. On a non-`CW_OK` status, [`cw_last_error_message`] describes
//! the failure. Strings returned through `char **` belong to the caller and are
//! released with [`cw_string_free`]; handles with their `_free` function.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::c_char;

use cwbench::exact::{grassmann_measure, sphere_area, ExactError};
use cwbench::formulas::{FormulaError, FormulaId, FormulaParams};
use cwbench::geometry::{BodySpec, GeometryError, SupportBody};
use cwbench::grassmann::GrassmannError;
use cwbench::report::{to_jsonl, CheckReport, Verdict};
use cwbench::symbolic::FormulaPoly;
use cwbench::verify::{config_from_json, run_check, run_suite, with_threads, VerifyError};

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    CW_OK = 0,
    CW_NULL_POINTER = 1,
    CW_INVALID_UTF8 = 2,
    /// An index, dimension or parameter out of range.
    CW_DOMAIN = 3,
    /// Malformed JSON or an unknown id.
    CW_PARSE = 4,
    /// The body failed its convexity certificate.
    CW_CONVEXITY = 5,
    /// A check ran and at least one report has verdict `fail`.
    CW_CHECK_FAILED = 6,
    CW_PANIC = 7,
}

/// Marks an unused field of [`CwFormulaParams`].
pub const CW_UNSET: i64 = i64::MIN;

/// Formula indices; set the ones the formula reads, the rest to `CW_UNSET`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CwFormulaParams {
    pub n: i64,
    pub r: i64,
    pub l: i64,
    pub i: i64,
    pub s: i64,
    pub q: i64,
    pub t: i64,
}

/// Opaque convex body.
pub struct CwBody {
    body: SupportBody,
}

/// Opaque symbolic formula.
pub struct CwFormula {
    poly: FormulaPoly,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(CwStatus, String);

type Outcome<T> = Result<T, Failure>;

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        let status = match &e {
            GeometryError::Convexity { .. } => CwStatus::CW_CONVEXITY,
            GeometryError::Parse(_) => CwStatus::CW_PARSE,
            _ => CwStatus::CW_DOMAIN,
        };
        Failure(status, e.to_string())
    }
}

impl From<FormulaError> for Failure {
    fn from(e: FormulaError) -> Self {
        let status = match &e {
            FormulaError::UnknownId(_) => CwStatus::CW_PARSE,
            _ => CwStatus::CW_DOMAIN,
        };
        Failure(status, e.to_string())
    }
}

impl From<ExactError> for Failure {
    fn from(e: ExactError) -> Self {
        Failure(CwStatus::CW_DOMAIN, e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Geometry(g) | VerifyError::Grassmann(GrassmannError::Geometry(g)) => g.into(),
            VerifyError::Formula(f) => f.into(),
            VerifyError::UnknownCheck(_) | VerifyError::UnknownSuite(_) => Failure(CwStatus::CW_PARSE, e.to_string()),
            other => Failure(CwStatus::CW_DOMAIN, other.to_string()),
        }
    }
}

/// Runs `f`, turning errors and panics into a status and the thread's error message.
fn guard(f: impl FnOnce() -> Outcome<()>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwStatus::CW_OK,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {message}"));
            CwStatus::CW_PANIC
        }
    }
}

fn null() -> Failure {
    Failure(CwStatus::CW_NULL_POINTER, "null pointer argument".into())
}

unsafe fn text<'a>(p: *const c_char) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CwStatus::CW_INVALID_UTF8, e.to_string()))
}

unsafe fn write<T>(out: *mut T, value: T) -> Outcome<()> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, value: String) -> Outcome<()> {
    let c = CString::new(value).map_err(|e| Failure(CwStatus::CW_DOMAIN, e.to_string()))?;
    write(out, c.into_raw())
}

unsafe fn body<'a>(p: *const CwBody) -> Outcome<&'a SupportBody> {
    p.as_ref().map(|b| &b.body).ok_or_else(null)
}

/// Message of the last failed call on this thread; valid until the next call.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a body from a JSON spec. A ball without `dim` gets `default_dim`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_body_from_json(json: *const c_char, default_dim: usize, out: *mut *mut CwBody) -> CwStatus {
    guard(|| {
        let spec = BodySpec::from_json(text(json)?)?;
        let body = spec.build(default_dim)?;
        write(out, Box::into_raw(Box::new(CwBody { body })))
    })
}

/// # Safety
/// `body` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cw_body_free(body: *mut CwBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Ambient dimension, 0 for null.
///
/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_body_dim(body: *const CwBody) -> usize {
    body.as_ref().map_or(0, |b| b.body.dim())
}

/// Writes the body's JSON spec.
///
/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_body_to_json(body: *const CwBody, out: *mut *mut c_char) -> CwStatus {
    guard(|| {
        let b = self::body(body)?;
        write_string(out, b.to_spec().to_json())
    })
}

/// `i`-th mean curvature integral on the default grid.
///
/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_body_mean_curvature_integral(body: *const CwBody, i: usize, out: *mut f64) -> CwStatus {
    guard(|| {
        let v = self::body(body)?.mean_curvature_integral(i)?;
        write(out, v)
    })
}

/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_body_volume(body: *const CwBody, out: *mut f64) -> CwStatus {
    guard(|| {
        let v = self::body(body)?.volume()?;
        write(out, v)
    })
}

/// Width in the unit direction `u` of length `len` (the body's dimension).
///
/// # Safety
/// `body` must be a live handle, `u` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_body_width(body: *const CwBody, u: *const f64, len: usize, out: *mut f64) -> CwStatus {
    guard(|| {
        let b = self::body(body)?;
        if u.is_null() {
            return Err(null());
        }
        let u = std::slice::from_raw_parts(u, len);
        write(out, b.width(u)?)
    })
}

/// Outer parallel body at distance `rho`, as a new handle.
///
/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_body_parallel(body: *const CwBody, rho: f64, out: *mut *mut CwBody) -> CwStatus {
    guard(|| {
        let parallel = self::body(body)?.parallel(rho)?;
        write(out, Box::into_raw(Box::new(CwBody { body: parallel })))
    })
}

/// Builds the formula `id` (e.g. `"thm-1.1"`).
///
/// # Safety
/// `id` must be a nul-terminated string, `params` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_formula_build(
    id: *const c_char,
    params: *const CwFormulaParams,
    out: *mut *mut CwFormula,
) -> CwStatus {
    guard(|| {
        let id: FormulaId = text(id)?.parse()?;
        let p = params.as_ref().ok_or_else(null)?;
        let opt = |v: i64| (v != CW_UNSET).then_some(v);
        let params = FormulaParams {
            n: opt(p.n),
            r: opt(p.r),
            l: opt(p.l),
            i: opt(p.i),
            s: opt(p.s),
            q: opt(p.q),
            t: opt(p.t),
        };
        let poly = id.build(&params)?;
        write(out, Box::into_raw(Box::new(CwFormula { poly })))
    })
}

/// Canonical string of the formula.
///
/// # Safety
/// `formula` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_formula_to_string(formula: *const CwFormula, out: *mut *mut c_char) -> CwStatus {
    guard(|| {
        let f = formula.as_ref().ok_or_else(null)?;
        write_string(out, f.poly.to_string())
    })
}

/// 1 if the formulas are identical polynomials, 0 if not, -1 if either is null.
///
/// # Safety
/// Both arguments must be null or live handles.
#[no_mangle]
pub unsafe extern "C" fn cw_formula_equal(a: *const CwFormula, b: *const CwFormula) -> i32 {
    match (a.as_ref(), b.as_ref()) {
        (Some(a), Some(b)) => i32::from(a.poly == b.poly),
        _ => -1,
    }
}

/// # Safety
/// `formula` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cw_formula_free(formula: *mut CwFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

fn verdict_status(reports: &[CheckReport]) -> Outcome<()> {
    let failed = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure(CwStatus::CW_CHECK_FAILED, format!("{failed} check(s) failed")))
    }
}

/// Runs one check with a flat JSON config and writes its JSONL report. The
/// report is written even when the status is `CW_CHECK_FAILED`.
///
/// # Safety
/// `id` and `config_json` must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_run_check(id: *const c_char, config_json: *const c_char, out: *mut *mut c_char) -> CwStatus {
    guard(|| {
        let id = text(id)?;
        let config = config_from_json(text(config_json)?)?;
        let reports = [run_check(id, &config)?];
        write_string(out, to_jsonl(&reports))?;
        verdict_status(&reports)
    })
}

/// Runs a named suite on `threads` workers (0: all cores) and writes its JSONL reports.
///
/// # Safety
/// `suite` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_run_suite(suite: *const c_char, threads: usize, out: *mut *mut c_char) -> CwStatus {
    guard(|| {
        let suite = text(suite)?;
        let reports = with_threads(threads, || run_suite(suite))?;
        write_string(out, to_jsonl(&reports))?;
        verdict_status(&reports)
    })
}

/// Area of the unit sphere `S^m`: canonical exact form and its double value.
/// Either out-pointer may be null.
///
/// # Safety
/// Non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_sphere_area(m: i64, exact: *mut *mut c_char, value: *mut f64) -> CwStatus {
    guard(|| {
        let area = sphere_area(m)?;
        write_exact(area.to_string(), area.to_f64(), exact, value)
    })
}

/// Measure of the Grassmannian of `r`-planes in `n`-space, as in [`cw_sphere_area`].
///
/// # Safety
/// Non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_grassmann_measure(n: i64, r: i64, exact: *mut *mut c_char, value: *mut f64) -> CwStatus {
    guard(|| {
        let m = grassmann_measure(n, r)?;
        write_exact(m.to_string(), m.to_f64(), exact, value)
    })
}

unsafe fn write_exact(text: String, x: f64, exact: *mut *mut c_char, value: *mut f64) -> Outcome<()> {
    if !exact.is_null() {
        write_string(exact, text)?;
    }
    if !value.is_null() {
        value.write(x);
    }
    Ok(())
}
