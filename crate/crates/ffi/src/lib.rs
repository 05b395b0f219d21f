//! C ABI for `torus-lp`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and released with the
//! matching `*_free`. Every fallible call returns a [`TlpStatus`]; the message of the last
//! failure on the calling thread is available from [`tlp_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use torus_lp::bilinear::{apply_direct, derivative_budget, BilinearSymbol, Setting};
use torus_lp::grid_field::{d_s, random_band_limited};
use torus_lp::littlewood_paley::{make_lp_family, LpFamily, TransitionProfile};
use torus_lp::scattering::{u_infinity, OperatorType, ScatteringProblem};
use torus_lp::spaces::{norm, SpaceSpec};
use torus_lp::{Error, Field, Grid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlpStatus {
    Ok = 0,
    NullPointer = 1,
    Structural = 2,
    NumericDomain = 3,
    Precondition = 4,
    Config = 5,
    Unsupported = 6,
    Convergence = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

/// Sampled field on the periodic grid.
pub struct TlpField(Field);

/// Littlewood-Paley family bound to a grid.
pub struct TlpFamily(LpFamily);

/// Bilinear Fourier symbol.
pub struct TlpSymbol(BilinearSymbol);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TlpStatus {
    match e {
        Error::Structural(_) => TlpStatus::Structural,
        Error::NumericDomain(_) => TlpStatus::NumericDomain,
        Error::Precondition(_) => TlpStatus::Precondition,
        Error::Config(_) => TlpStatus::Config,
        Error::Unsupported(_) => TlpStatus::Unsupported,
        Error::Convergence(_) => TlpStatus::Convergence,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> TlpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            TlpStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            TlpStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8");
            TlpStatus::InvalidUtf8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            TlpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_slot<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn string_arg(p: *const c_char, what: &'static str) -> Result<String, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map(str::to_owned).map_err(|_| Fail::Utf8)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn tlp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tlp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Field from `len = N^dim` real samples in row-major order.
///
/// # Safety
/// `values` must point to `len` doubles and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_from_real(
    dim: usize,
    n: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut TlpField,
) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        let grid = Grid::new(dim, n)?;
        let vals = std::slice::from_raw_parts(values, len);
        *out = boxed(TlpField(Field::from_real(grid, vals)?));
        Ok(())
    })
}

/// Complex Gaussian spectrum on the annulus `lo <= |k| <= hi`, unit L2 norm.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_random(
    dim: usize,
    n: usize,
    lo: f64,
    hi: f64,
    seed: u64,
    mean_zero: bool,
    out: *mut *mut TlpField,
) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let grid = Grid::new(dim, n)?;
        *out = boxed(TlpField(random_band_limited(grid, lo, hi, seed, mean_zero)?));
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_free(field: *mut TlpField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of samples, `N^dim`; 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_len(field: *const TlpField) -> usize {
    field.as_ref().map_or(0, |f| f.0.grid().len())
}

/// Samples per axis; 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_n(field: *const TlpField) -> usize {
    field.as_ref().map_or(0, |f| f.0.grid().n())
}

/// Copies the spatial samples into `re` and `im`, each of length `len`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_samples(field: *const TlpField, re: *mut f64, im: *mut f64, len: usize) -> TlpStatus {
    guard(|| {
        let f = deref(field, "field")?;
        if re.is_null() || im.is_null() {
            return Err(Fail::Null("re/im"));
        }
        let s = f.0.spatial();
        if len != s.len() {
            return Err(Error::Structural(format!("buffer holds {len} samples, field has {}", s.len())).into());
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (i, c) in s.iter().enumerate() {
            re[i] = c.re;
            im[i] = c.im;
        }
        Ok(())
    })
}

/// `L2` norm with respect to the normalised measure.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_field_l2_norm(field: *const TlpField, out: *mut f64) -> TlpStatus {
    guard(|| {
        *out_slot(out, "out")? = deref(field, "field")?.0.l2_norm();
        Ok(())
    })
}

/// `D^s f`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_d_s(field: *const TlpField, s: f64, out: *mut *mut TlpField) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = boxed(TlpField(d_s(&deref(field, "field")?.0, s)?));
        Ok(())
    })
}

/// Littlewood-Paley family with the default transition profile.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_family_new(dim: usize, n: usize, out: *mut *mut TlpFamily) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let grid = Grid::new(dim, n)?;
        *out = boxed(TlpFamily(make_lp_family(TransitionProfile::default(), grid)?));
        Ok(())
    })
}

/// # Safety
/// `family` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tlp_family_free(family: *mut TlpFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Largest deviation of the dyadic partition from 1 on the in-band frequencies.
///
/// # Safety
/// `family` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_family_partition_error(family: *const TlpFamily, out: *mut f64) -> TlpStatus {
    guard(|| {
        *out_slot(out, "out")? = deref(family, "family")?.0.partition_error();
        Ok(())
    })
}

/// Quasi-norm of `field` in the space described by `spec_json`, e.g.
/// `{"family":"triebel_lizorkin","p":2,"q":2,"s":1}`.
///
/// # Safety
/// Handles must be live, `spec_json` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_norm(
    field: *const TlpField,
    family: *const TlpFamily,
    spec_json: *const c_char,
    out: *mut f64,
) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let text = string_arg(spec_json, "spec_json")?;
        let spec: SpaceSpec = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        *out = norm(&deref(field, "field")?.0, &spec, &deref(family, "family")?.0)?;
        Ok(())
    })
}

/// Symbol from its textual name, e.g. `one`, `inverse_gamma(2)`.
///
/// # Safety
/// `name` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_symbol_parse(name: *const c_char, out: *mut *mut TlpSymbol) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let name = string_arg(name, "name")?;
        *out = boxed(TlpSymbol(BilinearSymbol::parse(&name)?));
        Ok(())
    })
}

/// # Safety
/// `symbol` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tlp_symbol_free(symbol: *mut TlpSymbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

/// `T_sigma(f, g)` on the padded grid of twice the resolution.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_apply_direct(
    symbol: *const TlpSymbol,
    f: *const TlpField,
    g: *const TlpField,
    out: *mut *mut TlpField,
) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let r = apply_direct(&deref(symbol, "symbol")?.0, &deref(f, "f")?.0, &deref(g, "g")?.0)?;
        *out = boxed(TlpField(r));
        Ok(())
    })
}

/// Smoothness budget; `besov` selects the Besov form, otherwise Triebel-Lizorkin.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tlp_derivative_budget(
    n: usize,
    p1: f64,
    p2: f64,
    p: f64,
    q: f64,
    tau1: f64,
    tau2: f64,
    besov: bool,
    out: *mut u64,
) -> TlpStatus {
    guard(|| {
        let setting = if besov { Setting::Besov } else { Setting::Tl };
        *out_slot(out, "out")? = derivative_budget(n, p1, p2, p, q, tau1, tau2, setting);
        Ok(())
    })
}

/// Scattering limit `T_{1/lambda}(f, g)` of the `D^gamma` (or `J^gamma` when `inhomogeneous`) system.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tlp_scattering_limit(
    gamma: f64,
    inhomogeneous: bool,
    f: *const TlpField,
    g: *const TlpField,
    out: *mut *mut TlpField,
) -> TlpStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let kind = if inhomogeneous { OperatorType::Inhomogeneous } else { OperatorType::Homogeneous };
        let problem = ScatteringProblem::new(kind, gamma, deref(f, "f")?.0.clone(), deref(g, "g")?.0.clone());
        *out = boxed(TlpField(u_infinity(&problem)?));
        Ok(())
    })
}
