//! C ABI over the returnset library.
//!
//! Instances travel as JSON documents (the same schema the CLI uses) held
//! behind opaque handles; reports come back as JSON strings allocated by
//! this library and released with [`rs_string_free`]. Every entry point
//! returns an [`RsStatus`]; on failure a human-readable message is stored
//! per thread and retrievable with [`rs_last_error_message`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use returnset::cli::{self, InstanceDoc};
use returnset::error::Error;

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    /// Malformed JSON, schema violations, expression syntax errors.
    ParseError = 1,
    /// The orbit left the torus or hit a vanishing denominator.
    UndefinedOrbit = 2,
    /// A configured resource bound (factorization, term size, height) hit.
    ResourceBound = 3,
    /// An internal invariant failed; always a bug.
    InternalError = 4,
    /// Null pointer or invalid argument at the boundary.
    InvalidArgument = 5,
}

fn status_for(err: &Error) -> RsStatus {
    match cli::exit_code_for(err) {
        1 => RsStatus::ParseError,
        2 => RsStatus::UndefinedOrbit,
        3 => RsStatus::ResourceBound,
        4 => RsStatus::InternalError,
        _ => RsStatus::InvalidArgument,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(sanitized).unwrap());
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

/// An instance document behind an opaque handle.
pub struct RsInstance {
    doc: InstanceDoc,
}

unsafe fn read_c_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

fn export_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// The most recent error message on this thread, as a fresh allocation
/// (release with `rs_string_free`), or NULL when there is none.
#[no_mangle]
pub extern "C" fn rs_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => export_string(msg.to_string_lossy().into_owned()),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string allocated by this library. NULL is accepted.
///
/// # Safety
/// `s` must be a pointer previously returned by this library's
/// string-producing functions and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Parses an instance JSON document into a handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn rs_instance_parse(
    json: *const c_char,
    out: *mut *mut RsInstance,
) -> RsStatus {
    clear_last_error();
    if out.is_null() {
        set_last_error("out pointer is null".into());
        return RsStatus::InvalidArgument;
    }
    let Some(text) = (unsafe { read_c_str(json) }) else {
        set_last_error("instance JSON pointer is null or not UTF-8".into());
        return RsStatus::InvalidArgument;
    };
    match serde_json::from_str::<InstanceDoc>(text) {
        Ok(doc) => {
            unsafe { *out = Box::into_raw(Box::new(RsInstance { doc })) };
            RsStatus::Ok
        }
        Err(e) => {
            set_last_error(format!("invalid instance JSON: {e}"));
            RsStatus::ParseError
        }
    }
}

/// Loads a built-in instance by name: "example1", "example2-p2",
/// "example2-p3".
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn rs_instance_builtin(
    name: *const c_char,
    out: *mut *mut RsInstance,
) -> RsStatus {
    clear_last_error();
    if out.is_null() {
        set_last_error("out pointer is null".into());
        return RsStatus::InvalidArgument;
    }
    let Some(name) = (unsafe { read_c_str(name) }) else {
        set_last_error("name pointer is null or not UTF-8".into());
        return RsStatus::InvalidArgument;
    };
    match cli::builtin_instance(name) {
        Some(doc) => {
            unsafe { *out = Box::into_raw(Box::new(RsInstance { doc })) };
            RsStatus::Ok
        }
        None => {
            set_last_error(format!("no built-in instance named '{name}'"));
            RsStatus::InvalidArgument
        }
    }
}

/// Releases an instance handle. NULL is accepted.
///
/// # Safety
/// `instance` must come from `rs_instance_parse` or `rs_instance_builtin`
/// and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_instance_free(instance: *mut RsInstance) {
    if !instance.is_null() {
        drop(unsafe { Box::from_raw(instance) });
    }
}

/// Overrides the scan bound n_max of the instance.
///
/// # Safety
/// `instance` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rs_instance_set_n_max(instance: *mut RsInstance, n_max: u64) -> RsStatus {
    let Some(handle) = (unsafe { instance.as_mut() }) else {
        set_last_error("instance handle is null".into());
        return RsStatus::InvalidArgument;
    };
    handle.doc.params.n_max = n_max;
    RsStatus::Ok
}

/// Overrides the reproducibility seed of the instance.
///
/// # Safety
/// `instance` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rs_instance_set_seed(instance: *mut RsInstance, seed: u64) -> RsStatus {
    let Some(handle) = (unsafe { instance.as_mut() }) else {
        set_last_error("instance handle is null".into());
        return RsStatus::InvalidArgument;
    };
    handle.doc.params.seed = seed;
    RsStatus::Ok
}

fn dispatch(command: &str, doc: &InstanceDoc) -> Result<cli::ReportDoc, Error> {
    match command {
        "analyze" => cli::cmd_analyze(doc),
        "zeroset" => cli::cmd_zeroset(doc),
        "pipeline" => cli::cmd_pipeline(doc),
        "fgab" => cli::cmd_fgab(doc),
        other => Err(Error::Schema(format!("unknown command '{other}'"))),
    }
}

/// Runs a command ("analyze", "zeroset", "pipeline", "fgab") against the
/// instance and stores the report JSON in `out_report` (release with
/// `rs_string_free`). A report whose recorded assertions contain a failure
/// yields `InternalError` while still producing the report.
///
/// # Safety
/// `instance` must be a live handle; `command` a valid NUL-terminated
/// string; `out_report` a valid pointer to receive the string.
#[no_mangle]
pub unsafe extern "C" fn rs_run(
    instance: *const RsInstance,
    command: *const c_char,
    out_report: *mut *mut c_char,
) -> RsStatus {
    clear_last_error();
    if out_report.is_null() {
        set_last_error("out pointer is null".into());
        return RsStatus::InvalidArgument;
    }
    unsafe { *out_report = std::ptr::null_mut() };
    let Some(handle) = (unsafe { instance.as_ref() }) else {
        set_last_error("instance handle is null".into());
        return RsStatus::InvalidArgument;
    };
    let Some(command) = (unsafe { read_c_str(command) }) else {
        set_last_error("command pointer is null or not UTF-8".into());
        return RsStatus::InvalidArgument;
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| dispatch(command, &handle.doc)));
    match outcome {
        Ok(Ok(report)) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            unsafe { *out_report = export_string(json) };
            if cli::report_exit_code(&report) == 4 {
                set_last_error("an internal invariant assertion failed; see the report".into());
                RsStatus::InternalError
            } else {
                RsStatus::Ok
            }
        }
        Ok(Err(err)) => {
            set_last_error(err.to_string());
            status_for(&err)
        }
        Err(_) => {
            set_last_error("panic across the FFI boundary".into());
            RsStatus::InternalError
        }
    }
}

/// Runs the built-in paper-example verification; stores the report JSON in
/// `out_report` (release with `rs_string_free`).
///
/// # Safety
/// `out_report` must be a valid pointer to receive the string.
#[no_mangle]
pub unsafe extern "C" fn rs_verify_paper_examples(out_report: *mut *mut c_char) -> RsStatus {
    clear_last_error();
    if out_report.is_null() {
        set_last_error("out pointer is null".into());
        return RsStatus::InvalidArgument;
    }
    unsafe { *out_report = std::ptr::null_mut() };
    let outcome = catch_unwind(cli::cmd_verify_examples);
    match outcome {
        Ok(Ok(report)) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            unsafe { *out_report = export_string(json) };
            if cli::report_exit_code(&report) == 4 {
                set_last_error("a paper-example check failed".into());
                RsStatus::InternalError
            } else {
                RsStatus::Ok
            }
        }
        Ok(Err(err)) => {
            set_last_error(err.to_string());
            status_for(&err)
        }
        Err(_) => {
            set_last_error("panic across the FFI boundary".into());
            RsStatus::InternalError
        }
    }
}
