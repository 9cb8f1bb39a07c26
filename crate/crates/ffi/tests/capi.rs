use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use argos_ffi::*;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/winter_fox");

fn read(name: &str) -> CString {
    let text = std::fs::read_to_string(Path::new(FIXTURE).join(name)).unwrap();
    CString::new(text).unwrap()
}

fn last_error() -> String {
    let p = argos_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    argos_string_free(s);
    out
}

#[test]
fn solves_winter_fox() {
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(
            argos_problem_from_json(read("winter_fox.json").as_ptr(), &mut problem),
            ArgosStatus::Ok
        );
        let mut backend = ptr::null_mut();
        assert_eq!(
            argos_oracle_from_json(read("kb.json").as_ptr(), 0, 0.0, 0, &mut backend),
            ArgosStatus::Ok
        );
        let config = argos_config_default();
        assert_eq!(config.k, 5);
        assert_eq!(config.max_cot, -1);
        let mut result = ptr::null_mut();
        assert_eq!(argos_solve(problem, backend, &config, &mut result), ArgosStatus::Ok);

        assert!(!argos_result_verdict(result));
        assert_eq!(argos_result_decided_by(result), ArgosDecidedBy::Sat);
        assert_eq!(argos_result_confidence(result), 1.0);
        assert_eq!(argos_result_clause_count(result), 3);
        assert_eq!(argos_result_cot_calls(result), 15);
        assert_eq!(take(argos_result_summary(result)), "False (sat, 3 clauses)");
        assert_eq!(
            take(argos_result_clause(result, 0)),
            "turns_white(fox, winter) -> reflects(fox, sun)"
        );
        assert!(argos_result_clause(result, 3).is_null());
        let golden = std::fs::read_to_string(Path::new(FIXTURE).join("trace.jsonl")).unwrap();
        assert_eq!(take(argos_result_trace_jsonl(result)), golden);

        argos_result_free(result);
        argos_backend_free(backend);
        argos_problem_free(problem);
    }
}

#[test]
fn null_config_means_defaults() {
    unsafe {
        let mut problem = ptr::null_mut();
        argos_problem_from_json(read("winter_fox.json").as_ptr(), &mut problem);
        let mut backend = ptr::null_mut();
        argos_oracle_from_json(read("kb.json").as_ptr(), 0, 0.0, 0, &mut backend);
        let mut result = ptr::null_mut();
        assert_eq!(argos_solve(problem, backend, ptr::null(), &mut result), ArgosStatus::Ok);
        assert_eq!(argos_result_clause_count(result), 3);
        argos_result_free(result);
        argos_backend_free(backend);
        argos_problem_free(problem);
    }
}

#[test]
fn cot_cap_zero_falls_back() {
    unsafe {
        let mut problem = ptr::null_mut();
        argos_problem_from_json(read("winter_fox.json").as_ptr(), &mut problem);
        let mut backend = ptr::null_mut();
        argos_oracle_from_json(read("kb.json").as_ptr(), 0, 0.0, 0, &mut backend);
        let mut config = argos_config_default();
        config.max_cot = 0;
        let mut result = ptr::null_mut();
        assert_eq!(argos_solve(problem, backend, &config, &mut result), ArgosStatus::Ok);
        assert_eq!(argos_result_decided_by(result), ArgosDecidedBy::Fallback);
        assert_eq!(argos_result_cot_calls(result), 0);
        argos_result_free(result);
        argos_backend_free(backend);
        argos_problem_free(problem);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(
            argos_problem_from_json(ptr::null(), &mut problem),
            ArgosStatus::NullArgument
        );
        assert!(last_error().contains("json"));

        let bad = CString::new(r#"{"id": "x", "premises": ["p("], "query": "q"}"#).unwrap();
        assert_eq!(
            argos_problem_from_json(bad.as_ptr(), &mut problem),
            ArgosStatus::ParseError
        );
        assert!(problem.is_null());
        assert!(last_error().contains("premises"), "{}", last_error());

        let invalid = [0xffu8, 0];
        assert_eq!(
            argos_problem_from_json(invalid.as_ptr().cast(), &mut problem),
            ArgosStatus::InvalidUtf8
        );

        let mut backend = ptr::null_mut();
        assert_eq!(
            argos_oracle_from_json(read("kb.json").as_ptr(), 0, 1.5, 0, &mut backend),
            ArgosStatus::ParseError
        );
        assert!(last_error().contains("noise"));

        let mut result = ptr::null_mut();
        assert_eq!(
            argos_solve(ptr::null(), ptr::null(), ptr::null(), &mut result),
            ArgosStatus::NullArgument
        );
    }
}

#[test]
fn invalid_config_is_an_engine_error() {
    unsafe {
        let mut problem = ptr::null_mut();
        argos_problem_from_json(read("winter_fox.json").as_ptr(), &mut problem);
        let mut backend = ptr::null_mut();
        argos_oracle_from_json(read("kb.json").as_ptr(), 0, 0.0, 0, &mut backend);
        let mut config = argos_config_default();
        config.k = 0;
        let mut result = ptr::null_mut();
        assert_eq!(
            argos_solve(problem, backend, &config, &mut result),
            ArgosStatus::EngineError
        );
        assert!(result.is_null());
        argos_backend_free(backend);
        argos_problem_free(problem);
    }
}

#[test]
fn unreachable_wire_backend_reports_backend_error() {
    unsafe {
        let mut problem = ptr::null_mut();
        argos_problem_from_json(read("winter_fox.json").as_ptr(), &mut problem);
        let endpoint = CString::new("http://127.0.0.1:9/v1/completions").unwrap();
        let model = CString::new("m").unwrap();
        let mut backend = ptr::null_mut();
        assert_eq!(
            argos_wire_new(endpoint.as_ptr(), model.as_ptr(), ptr::null(), &mut backend),
            ArgosStatus::Ok
        );
        let mut config = argos_config_default();
        config.k = 1;
        let mut result = ptr::null_mut();
        // The SAT step needs no model, but the vote does and nothing listens.
        let status = argos_solve(problem, backend, &config, &mut result);
        assert_eq!(status, ArgosStatus::BackendError, "{}", last_error());
        argos_backend_free(backend);
        argos_problem_free(problem);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        argos_problem_free(ptr::null_mut());
        argos_backend_free(ptr::null_mut());
        argos_result_free(ptr::null_mut());
        argos_string_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/argos.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["argos_solve", "argos_last_error", "ArgosConfig", "ARGOS_STATUS_PANIC"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(status.success());
}
