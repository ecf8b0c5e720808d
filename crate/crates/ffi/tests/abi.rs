//! Exercises the C entry points the way a foreign caller would, through
//! raw pointers and NUL-terminated strings.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use returnset_ffi::{
    rs_instance_builtin, rs_instance_free, rs_instance_parse, rs_instance_set_n_max,
    rs_instance_set_seed, rs_last_error_message, rs_run, rs_string_free, rs_verify_paper_examples,
    rs_version, RsInstance, RsStatus,
};

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let s = unsafe { CStr::from_ptr(ptr) }.to_string_lossy().into_owned();
    unsafe { rs_string_free(ptr) };
    s
}

unsafe fn last_error() -> String {
    let ptr = rs_last_error_message();
    if ptr.is_null() {
        String::new()
    } else {
        unsafe { take_string(ptr) }
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(rs_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn builtin_roundtrip_analyze() {
    unsafe {
        let mut handle: *mut RsInstance = ptr::null_mut();
        let name = cstr("example2-p2");
        assert_eq!(rs_instance_builtin(name.as_ptr(), &mut handle), RsStatus::Ok);
        assert!(!handle.is_null());
        assert_eq!(rs_instance_set_n_max(handle, 64), RsStatus::Ok);
        assert_eq!(rs_instance_set_seed(handle, 0), RsStatus::Ok);

        let mut report: *mut c_char = ptr::null_mut();
        let cmd = cstr("analyze");
        assert_eq!(rs_run(handle, cmd.as_ptr(), &mut report), RsStatus::Ok);
        let json = take_string(report);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema"], "returnset-report/1");
        let residual: Vec<u64> = value["result"]["residual"]["elements"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        assert_eq!(residual, vec![0, 1, 3, 7, 15, 31, 63]);
        rs_instance_free(handle);
    }
}

#[test]
fn parse_and_run_zeroset() {
    let instance = r#"{
        "schema": "returnset-instance/1",
        "lrs": {"coefficients": ["1","1"], "initial": ["0","1"]},
        "params": {"n_max": 100, "k_max": 8}
    }"#;
    unsafe {
        let mut handle: *mut RsInstance = ptr::null_mut();
        let json = cstr(instance);
        assert_eq!(rs_instance_parse(json.as_ptr(), &mut handle), RsStatus::Ok);
        let mut report: *mut c_char = ptr::null_mut();
        let cmd = cstr("zeroset");
        assert_eq!(rs_run(handle, cmd.as_ptr(), &mut report), RsStatus::Ok);
        let value: serde_json::Value =
            serde_json::from_str(&take_string(report)).unwrap();
        assert_eq!(value["zero_set"]["sporadic"], serde_json::json!([0]));
        rs_instance_free(handle);
    }
}

#[test]
fn error_statuses_and_messages() {
    unsafe {
        // malformed JSON
        let mut handle: *mut RsInstance = ptr::null_mut();
        let bad = cstr("{ not json");
        assert_eq!(
            rs_instance_parse(bad.as_ptr(), &mut handle),
            RsStatus::ParseError
        );
        assert!(last_error().contains("invalid instance JSON"));

        // unknown builtin
        let nope = cstr("nope");
        assert_eq!(
            rs_instance_builtin(nope.as_ptr(), &mut handle),
            RsStatus::InvalidArgument
        );

        // null pointers
        assert_eq!(
            rs_instance_parse(ptr::null(), &mut handle),
            RsStatus::InvalidArgument
        );
        assert_eq!(
            rs_run(ptr::null(), cstr("analyze").as_ptr(), &mut ptr::null_mut()),
            RsStatus::InvalidArgument
        );

        // undefined orbit surfaces as its own status
        let orbit = cstr(
            r#"{
            "schema": "returnset-instance/1",
            "field": {"kind": "rationals"},
            "model": {"torus_rank": 1},
            "map": {"kind": "rational", "coords": ["1/(x1 - 1)"]},
            "alpha": {"torus": ["2"]},
            "gamma": [{"torus": ["2"]}],
            "params": {"n_max": 5}
        }"#,
        );
        assert_eq!(rs_instance_parse(orbit.as_ptr(), &mut handle), RsStatus::Ok);
        let mut report: *mut c_char = ptr::null_mut();
        let cmd = cstr("analyze");
        assert_eq!(
            rs_run(handle, cmd.as_ptr(), &mut report),
            RsStatus::UndefinedOrbit
        );
        assert!(report.is_null());
        assert!(last_error().contains("step 2"));
        rs_instance_free(handle);

        // resource bound
        let bounded = cstr(
            r#"{
            "schema": "returnset-instance/1",
            "lrs": {"coefficients": ["2"], "initial": ["1"]},
            "params": {"n_max": 1000, "k_max": 4, "term_bit_cap": 16}
        }"#,
        );
        assert_eq!(rs_instance_parse(bounded.as_ptr(), &mut handle), RsStatus::Ok);
        assert_eq!(
            rs_run(handle, cstr("zeroset").as_ptr(), &mut report),
            RsStatus::ResourceBound
        );
        rs_instance_free(handle);

        // unknown command
        let mut h2: *mut RsInstance = ptr::null_mut();
        let name = cstr("example1");
        assert_eq!(rs_instance_builtin(name.as_ptr(), &mut h2), RsStatus::Ok);
        assert_eq!(
            rs_run(h2, cstr("explode").as_ptr(), &mut report),
            RsStatus::ParseError
        );
        rs_instance_free(h2);

        // frees accept NULL
        rs_instance_free(ptr::null_mut());
        rs_string_free(ptr::null_mut());
    }
}

#[test]
fn verify_examples_through_ffi() {
    unsafe {
        let mut report: *mut c_char = ptr::null_mut();
        assert_eq!(rs_verify_paper_examples(&mut report), RsStatus::Ok);
        let value: serde_json::Value =
            serde_json::from_str(&take_string(report)).unwrap();
        let assertions = value["assertions"].as_array().unwrap();
        assert_eq!(assertions.len(), 4);
        assert!(assertions.iter().all(|a| a["pass"].as_bool().unwrap()));
    }
}

#[test]
fn header_was_generated() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("returnset.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header exists");
    for needle in [
        "RETURNSET_H",
        "RsStatus",
        "RsInstance",
        "rs_instance_parse",
        "rs_run",
        "rs_string_free",
        "rs_last_error_message",
    ] {
        assert!(text.contains(needle), "header misses {needle}");
    }
}
