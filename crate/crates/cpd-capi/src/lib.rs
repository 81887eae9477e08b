//! C ABI over the cpd toolkit: opaque model handles, integer error codes,
//! and malloc'd C strings for textual results.
//!
//! Conventions: every fallible function returns a `CpdStatus`; on failure a
//! thread-local message is retrievable via `cpd_last_error` (valid until
//! the next failing call on the same thread). Strings returned through out
//! parameters are owned by the caller and released with `cpd_string_free`;
//! models are released with `cpd_model_free`. Handles are not thread-safe
//! for concurrent mutation but may be shared for concurrent reads.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cpd::analyze;
use cpd::dsl;
use cpd::enumerate::{self, EnumOptions};
use cpd::families;
use cpd::model::Model;
use cpd::positions;
use cpd::render;

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpdStatus {
    CpdOk = 0,
    /// Parse or validation failure, bad filter syntax, bad arguments.
    CpdErrModel = 1,
    /// Infeasible position constraints.
    CpdErrInfeasible = 2,
    /// Enumeration stopped by a limit or budget.
    CpdErrIncomplete = 3,
    /// Internal invariant violation (a bug, not a usage error).
    CpdErrInternal = 4,
    /// Null pointer or non-UTF-8 input.
    CpdErrArgument = 5,
}

/// Opaque handle to a compiled model.
pub struct CpdModel {
    inner: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CpdStatus, msg: &str) -> CpdStatus {
    set_error(msg);
    status
}

/// Message of the most recent failure on this thread. Borrowed; valid until
/// the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn cpd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, CpdStatus> {
    if p.is_null() {
        return Err(CpdStatus::CpdErrArgument);
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| CpdStatus::CpdErrArgument)
}

fn give_string(text: String, out: *mut *mut c_char) -> CpdStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(_) => return fail(CpdStatus::CpdErrInternal, "text contains NUL"),
    };
    unsafe { *out = c.into_raw() };
    CpdStatus::CpdOk
}

fn guarded(f: impl FnOnce() -> CpdStatus) -> CpdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CpdStatus::CpdErrInternal, "panic across FFI boundary"),
    }
}

/// Parse and validate model text. On success `*out` owns a new handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_parse(
    text: *const c_char,
    out: *mut *mut CpdModel,
) -> CpdStatus {
    if out.is_null() {
        return fail(CpdStatus::CpdErrArgument, "out is null");
    }
    let text = match read_str(text) {
        Ok(t) => t,
        Err(s) => return fail(s, "text is null or not UTF-8"),
    };
    guarded(|| match dsl::parse(text) {
        Ok(m) => {
            *out = Box::into_raw(Box::new(CpdModel { inner: m }));
            CpdStatus::CpdOk
        }
        Err(errors) => {
            let msg: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
            fail(CpdStatus::CpdErrModel, &msg.join("\n"))
        }
    })
}

/// Built-in two-car chain benchmark of `n` transitions per car.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_bench(n: u32, out: *mut *mut CpdModel) -> CpdStatus {
    if out.is_null() {
        return fail(CpdStatus::CpdErrArgument, "out is null");
    }
    guarded(|| {
        *out = Box::into_raw(Box::new(CpdModel {
            inner: families::bench(n),
        }));
        CpdStatus::CpdOk
    })
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `m` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_free(m: *mut CpdModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of cars in the model.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_num_cars(m: *const CpdModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.num_cars())
}

/// Number of boxes in the model.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_num_boxes(m: *const CpdModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.num_boxes())
}

/// Canonical text form of the model.
///
/// # Safety
/// `m` must be a live handle; `out` valid. Free the string with
/// `cpd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_serialize(
    m: *const CpdModel,
    out: *mut *mut c_char,
) -> CpdStatus {
    let Some(model) = m.as_ref() else {
        return fail(CpdStatus::CpdErrArgument, "model is null");
    };
    if out.is_null() {
        return fail(CpdStatus::CpdErrArgument, "out is null");
    }
    guarded(|| give_string(dsl::serialize(&model.inner), out))
}

/// DOT graph of the model.
///
/// # Safety
/// `m` must be a live handle; `out` valid. Free the string with
/// `cpd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cpd_model_render_dot(
    m: *const CpdModel,
    out: *mut *mut c_char,
) -> CpdStatus {
    let Some(model) = m.as_ref() else {
        return fail(CpdStatus::CpdErrArgument, "model is null");
    };
    if out.is_null() {
        return fail(CpdStatus::CpdErrArgument, "out is null");
    }
    guarded(|| give_string(render::render_model_dot(&model.inner), out))
}

fn build_options(filter: Option<&str>) -> Result<EnumOptions, String> {
    let filter = match filter {
        None => None,
        Some(text) => Some(analyze::parse_filter(text).map_err(|e| e.to_string())?),
    };
    Ok(EnumOptions {
        filter,
        ..Default::default()
    })
}

/// Count all scenarios. `filter` may be null (no filter) or the CLI filter
/// mini-syntax. `*out_complete` reports whether the count is exhaustive.
///
/// # Safety
/// `m` must be a live handle; `out_count` and `out_complete` valid.
#[no_mangle]
pub unsafe extern "C" fn cpd_count_scenarios(
    m: *const CpdModel,
    filter: *const c_char,
    out_count: *mut u64,
    out_complete: *mut bool,
) -> CpdStatus {
    let Some(model) = m.as_ref() else {
        return fail(CpdStatus::CpdErrArgument, "model is null");
    };
    if out_count.is_null() || out_complete.is_null() {
        return fail(CpdStatus::CpdErrArgument, "out pointer is null");
    }
    let filter = if filter.is_null() {
        None
    } else {
        match read_str(filter) {
            Ok(f) => Some(f),
            Err(s) => return fail(s, "filter is not UTF-8"),
        }
    };
    guarded(|| {
        let options = match build_options(filter) {
            Ok(o) => o,
            Err(e) => return fail(CpdStatus::CpdErrModel, &e),
        };
        match enumerate::count_scenarios(&model.inner, &options) {
            Ok((count, complete)) => {
                *out_count = count;
                *out_complete = complete;
                CpdStatus::CpdOk
            }
            Err(e) => fail(map_enum_error(&e), &e.to_string()),
        }
    })
}

fn map_enum_error(e: &enumerate::EnumError) -> CpdStatus {
    match e {
        enumerate::EnumError::Internal(_) => CpdStatus::CpdErrInternal,
        enumerate::EnumError::Filter(_) => CpdStatus::CpdErrInfeasible,
        _ => CpdStatus::CpdErrModel,
    }
}

/// Enumerate all scenarios as one newline-delimited string, one scenario
/// per line (scenes joined by ` | `, cars as `name=index,lane,position`).
///
/// # Safety
/// `m` must be a live handle; `out` valid. Free the string with
/// `cpd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cpd_enumerate_lines(
    m: *const CpdModel,
    filter: *const c_char,
    out: *mut *mut c_char,
) -> CpdStatus {
    let Some(model) = m.as_ref() else {
        return fail(CpdStatus::CpdErrArgument, "model is null");
    };
    if out.is_null() {
        return fail(CpdStatus::CpdErrArgument, "out is null");
    }
    let filter = if filter.is_null() {
        None
    } else {
        match read_str(filter) {
            Ok(f) => Some(f),
            Err(s) => return fail(s, "filter is not UTF-8"),
        }
    };
    guarded(|| {
        let options = match build_options(filter) {
            Ok(o) => o,
            Err(e) => return fail(CpdStatus::CpdErrModel, &e),
        };
        let pos = match positions::resolve_positions(&model.inner) {
            Ok(p) => p,
            Err(e) => return fail(CpdStatus::CpdErrInfeasible, &e.to_string()),
        };
        match enumerate::enumerate_scenarios(&model.inner, &options) {
            Ok(r) => {
                let mut text = String::new();
                for s in &r.scenarios {
                    text.push_str(&enumerate::format_scenario(&model.inner, &pos, s));
                    text.push('\n');
                }
                give_string(text, out)
            }
            Err(e) => fail(map_enum_error(&e), &e.to_string()),
        }
    })
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cpd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    unsafe fn parse(text: &str) -> *mut CpdModel {
        let c = CString::new(text).unwrap();
        let mut m: *mut CpdModel = ptr::null_mut();
        assert_eq!(cpd_model_parse(c.as_ptr(), &mut m), CpdStatus::CpdOk);
        assert!(!m.is_null());
        m
    }

    const FIG2: &str = "\
model fig2
lane Left, Right
box LCar.0 in Left at 0
box LCar.1 in Left at 1
box LCar.2 in Left at 2
box RCar.0 in Right at 0
box RCar.1 in Right at 1
box RCar.2 in Right at 2
init LCar.0
init RCar.0
trans LCar.0 -> LCar.1
trans LCar.1 -> LCar.2
trans RCar.0 -> RCar.1
trans RCar.1 -> RCar.2
";

    #[test]
    fn parse_count_free() {
        unsafe {
            let m = parse(FIG2);
            assert_eq!(cpd_model_num_cars(m), 2);
            assert_eq!(cpd_model_num_boxes(m), 6);
            let mut count = 0u64;
            let mut complete = false;
            assert_eq!(
                cpd_count_scenarios(m, ptr::null(), &mut count, &mut complete),
                CpdStatus::CpdOk
            );
            assert_eq!(count, 6);
            assert!(complete);
            cpd_model_free(m);
        }
    }

    #[test]
    fn bad_model_reports_error() {
        unsafe {
            let c = CString::new("box A.0 in Nowhere\n").unwrap();
            let mut m: *mut CpdModel = ptr::null_mut();
            assert_eq!(
                cpd_model_parse(c.as_ptr(), &mut m),
                CpdStatus::CpdErrModel
            );
            let msg = CStr::from_ptr(cpd_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());
        }
    }

    #[test]
    fn enumerate_lines_and_filter() {
        unsafe {
            let mut m: *mut CpdModel = ptr::null_mut();
            assert_eq!(cpd_model_bench(3, &mut m), CpdStatus::CpdOk);
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(cpd_enumerate_lines(m, ptr::null(), &mut out), CpdStatus::CpdOk);
            let text = CStr::from_ptr(out).to_str().unwrap();
            assert_eq!(text.lines().count(), 20);
            cpd_string_free(out);

            let filter = CString::new("dist<3").unwrap();
            let mut count = 0u64;
            let mut complete = false;
            assert_eq!(
                cpd_count_scenarios(m, filter.as_ptr(), &mut count, &mut complete),
                CpdStatus::CpdOk
            );
            assert_eq!(count, 18);
            cpd_model_free(m);
        }
    }

    #[test]
    fn serialize_round_trips_through_the_abi() {
        unsafe {
            let m = parse(FIG2);
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(cpd_model_serialize(m, &mut out), CpdStatus::CpdOk);
            let text = CStr::from_ptr(out).to_str().unwrap().to_string();
            cpd_string_free(out);
            let again = parse(&text);
            let mut out2: *mut c_char = ptr::null_mut();
            assert_eq!(cpd_model_serialize(again, &mut out2), CpdStatus::CpdOk);
            assert_eq!(CStr::from_ptr(out2).to_str().unwrap(), text);
            cpd_string_free(out2);
            cpd_model_free(m);
            cpd_model_free(again);
        }
    }

    #[test]
    fn dot_output_present() {
        unsafe {
            let m = parse(FIG2);
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(cpd_model_render_dot(m, &mut out), CpdStatus::CpdOk);
            let text = CStr::from_ptr(out).to_str().unwrap();
            assert!(text.starts_with("digraph"));
            cpd_string_free(out);
            cpd_model_free(m);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut m: *mut CpdModel = ptr::null_mut();
            assert_eq!(
                cpd_model_parse(ptr::null(), &mut m),
                CpdStatus::CpdErrArgument
            );
            assert_eq!(
                cpd_model_serialize(ptr::null(), &mut ptr::null_mut()),
                CpdStatus::CpdErrArgument
            );
            assert_eq!(cpd_model_num_cars(ptr::null()), 0);
            cpd_model_free(ptr::null_mut());
            cpd_string_free(ptr::null_mut());
        }
    }
}
