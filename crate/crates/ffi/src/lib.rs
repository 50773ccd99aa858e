//! C ABI.
//!
//! Every function returns a [`PerclabStatus`]; results go through out
//! pointers. On failure the message is available from [`perclab_last_error`]
//! on the same thread until the next failing call. Strings returned by the
//! library are released with [`perclab_string_free`], regions with
//! [`perclab_region_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use perclab::cli::config::{parse_plan, Overrides};
use perclab::experiments::{config_hash, estimates_csv, run_estimates};
use perclab::lattice::{build_region, Region};
use perclab::theory;
use perclab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerclabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidRegion = 3,
    OutsideWindow = 4,
    Domain = 5,
    Config = 6,
    Internal = 7,
}

/// Opaque lattice region.
pub struct PerclabRegion {
    inner: Region,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PerclabStatus {
    match e {
        Error::InvalidRegion(_) | Error::DegenerateBox(_) => PerclabStatus::InvalidRegion,
        Error::OutsideWindow { .. } => PerclabStatus::OutsideWindow,
        Error::Domain(_) | Error::Unestimable(_) => PerclabStatus::Domain,
        Error::Config(_) | Error::Plan(_) | Error::EventSpec(_) => PerclabStatus::Config,
        _ => PerclabStatus::Internal,
    }
}

/// Runs `f`, mapping errors and panics to a status and the last-error slot.
fn guard(f: impl FnOnce() -> Result<(), (PerclabStatus, String)>) -> PerclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PerclabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PerclabStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (PerclabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PerclabStatus, String) {
    (PerclabStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (PerclabStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failure on this thread; empty if none. The pointer is
/// owned by the library and valid until the next failing call.
#[no_mangle]
pub extern "C" fn perclab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_region_new(
    mesh: f64,
    halfwidth: f64,
    anchor_re: f64,
    anchor_im: f64,
    out: *mut *mut PerclabRegion,
) -> PerclabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = build_region(mesh, halfwidth, Complex64::new(anchor_re, anchor_im)).map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(PerclabRegion { inner })), "out")
    })
}

/// # Safety
/// `region` must come from [`perclab_region_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn perclab_region_free(region: *mut PerclabRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}

/// # Safety
/// `region` must be a live region and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_region_len(region: *const PerclabRegion, out: *mut usize) -> PerclabStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(|| null("region"))?;
        write(out, r.inner.len(), "out")
    })
}

/// Site whose hexagon contains `re + i·im`.
///
/// # Safety
/// `region` must be a live region and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_region_site_of_point(
    region: *const PerclabRegion,
    re: f64,
    im: f64,
    out: *mut u32,
) -> PerclabStatus {
    guard(|| {
        let r = region.as_ref().ok_or_else(|| null("region"))?;
        let site = r.inner.site_of_point(Complex64::new(re, im)).map_err(lib_err)?;
        write(out, site, "out")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_k_f(out: *mut f64) -> PerclabStatus {
    guard(|| write(out, theory::k_f(), "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_hyp2f1(a: f64, b: f64, c: f64, z: f64, out: *mut f64) -> PerclabStatus {
    guard(|| write(out, theory::hyp2f1(a, b, c, z).map_err(lib_err)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_psi_factor(u1: f64, s: f64, u2: f64, w_re: f64, w_im: f64, out: *mut f64) -> PerclabStatus {
    guard(|| write(out, theory::psi_factor(u1, s, u2, Complex64::new(w_re, w_im)).map_err(lib_err)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn perclab_cardy_crossing(x1: f64, x2: f64, x3: f64, x4: f64, out: *mut f64) -> PerclabStatus {
    guard(|| write(out, theory::cardy_crossing(x1, x2, x3, x4).map_err(lib_err)?, "out"))
}

/// Runs an estimation plan given as JSON (the `simulate` config schema) and
/// returns `estimates.csv` as a string. `workers = 0` picks the default.
///
/// # Safety
/// `plan_json` must be a nul-terminated string and `out_csv` valid for writes.
/// The returned string must be released with [`perclab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn perclab_run_estimates(
    plan_json: *const c_char,
    workers: u32,
    out_csv: *mut *mut c_char,
) -> PerclabStatus {
    guard(|| {
        if plan_json.is_null() {
            return Err(null("plan_json"));
        }
        if out_csv.is_null() {
            return Err(null("out_csv"));
        }
        let text = CStr::from_ptr(plan_json)
            .to_str()
            .map_err(|e| (PerclabStatus::InvalidArgument, format!("plan_json is not UTF-8: {e}")))?;
        let plan = parse_plan(text, "plan", &Overrides::default()).map_err(|errs| (PerclabStatus::Config, errs.join("\n")))?;
        let workers = if workers == 0 { perclab::experiments::default_workers() } else { workers as usize };
        let runs = run_estimates(&plan, workers).map_err(lib_err)?;
        let records: Vec<_> = runs.iter().flat_map(|r| r.records()).collect();
        let hash = config_hash(&plan).map_err(lib_err)?;
        let csv = estimates_csv(&hash, &records).map_err(lib_err)?;
        let c = CString::new(csv).map_err(|e| (PerclabStatus::Internal, e.to_string()))?;
        write(out_csv, c.into_raw(), "out_csv")
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn perclab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
