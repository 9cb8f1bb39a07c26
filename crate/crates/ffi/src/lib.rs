//! C interface to the argos engine.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` /
//! `*_from_json` functions and released by the matching `*_free`. Calls that
//! can fail return an [`ArgosStatus`] and leave a message for
//! [`argos_last_error`]. Strings handed out by the library are owned by the
//! caller and must be released with [`argos_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use argos::engine::{solve, DecidedBy, EngineConfig, SolveResult};
use argos::harness::Problem;
use argos::llm::{LlmBackend, OracleBackend, OracleConfig, OracleKb, WireBackend, WireConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgosStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    BackendError = 4,
    EngineError = 5,
    IoError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgosDecidedBy {
    Sat = 0,
    SelfConsistency = 1,
    Fallback = 2,
}

impl From<DecidedBy> for ArgosDecidedBy {
    fn from(d: DecidedBy) -> Self {
        match d {
            DecidedBy::Sat => ArgosDecidedBy::Sat,
            DecidedBy::SelfConsistency => ArgosDecidedBy::SelfConsistency,
            DecidedBy::Fallback => ArgosDecidedBy::Fallback,
        }
    }
}

/// Engine knobs. Start from [`argos_config_default`] and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgosConfig {
    /// Chain-of-thought samples per vote.
    pub k: usize,
    pub gamma0: f64,
    pub alpha: f64,
    pub tau: f64,
    /// Chain-of-thought request cap; negative means no cap.
    pub max_cot: i64,
    pub max_candidates_per_pair: usize,
    pub seed: u64,
    pub self_consistency: bool,
}

impl From<&ArgosConfig> for EngineConfig {
    fn from(c: &ArgosConfig) -> Self {
        let mut e = EngineConfig {
            k: c.k,
            gamma0: c.gamma0,
            alpha: c.alpha,
            tau: c.tau,
            max_cot: usize::try_from(c.max_cot).ok(),
            max_candidates_per_pair: c.max_candidates_per_pair,
            seed: c.seed,
            ..EngineConfig::default()
        };
        e.ablation.self_consistency = c.self_consistency;
        e
    }
}

pub struct ArgosProblem(Problem);

pub struct ArgosBackend(Box<dyn LlmBackend>);

pub struct ArgosResult(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl ToString) {
    let message = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

fn fail(status: ArgosStatus, message: impl ToString) -> ArgosStatus {
    set_error(message);
    status
}

/// Run `f`, turning a panic into [`ArgosStatus::Panic`].
fn guard(f: impl FnOnce() -> ArgosStatus) -> ArgosStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(ArgosStatus::Panic, "panic inside argos"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, ArgosStatus> {
    if p.is_null() {
        return Err(fail(ArgosStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(ArgosStatus::InvalidUtf8, format!("{name}: {e}")))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message describing the most recent failure on this thread, or NULL.
/// The pointer stays valid until the next failing call on the same thread;
/// do not free it.
#[no_mangle]
pub extern "C" fn argos_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn argos_config_default() -> ArgosConfig {
    let e = EngineConfig::default();
    ArgosConfig {
        k: e.k,
        gamma0: e.gamma0,
        alpha: e.alpha,
        tau: e.tau,
        max_cot: e.max_cot.map_or(-1, |c| c as i64),
        max_candidates_per_pair: e.max_candidates_per_pair,
        seed: e.seed,
        self_consistency: e.ablation.self_consistency,
    }
}

/// Parse a problem document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn argos_problem_from_json(json: *const c_char, out: *mut *mut ArgosProblem) -> ArgosStatus {
    guard(|| {
        if out.is_null() {
            return fail(ArgosStatus::NullArgument, "out is null");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Problem::parse_json(text) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(ArgosProblem(p)));
                ArgosStatus::Ok
            }
            Err(e) => fail(ArgosStatus::ParseError, e),
        }
    })
}

/// # Safety
/// `problem` must be NULL or a pointer from [`argos_problem_from_json`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn argos_problem_free(problem: *mut ArgosProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Oracle backend over a knowledge base document (the `kb.json` format).
///
/// # Safety
/// `kb_json` must be a NUL-terminated string and `out` a valid pointer to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn argos_oracle_from_json(
    kb_json: *const c_char,
    reasoning_depth: usize,
    noise: f64,
    seed: u64,
    out: *mut *mut ArgosBackend,
) -> ArgosStatus {
    guard(|| {
        if out.is_null() {
            return fail(ArgosStatus::NullArgument, "out is null");
        }
        let text = match str_arg(kb_json, "kb_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        if !(0.0..=1.0).contains(&noise) {
            return fail(
                ArgosStatus::ParseError,
                format!("noise must lie in [0, 1], got {noise}"),
            );
        }
        let kb = match OracleKb::from_json(text) {
            Ok(kb) => kb,
            Err(e) => return fail(ArgosStatus::ParseError, e),
        };
        let config = OracleConfig {
            reasoning_depth,
            noise,
            seed,
            ..OracleConfig::default()
        };
        *out = Box::into_raw(Box::new(ArgosBackend(Box::new(OracleBackend::new(kb, config)))));
        ArgosStatus::Ok
    })
}

/// Backend talking to an OpenAI-style completions endpoint.
///
/// # Safety
/// `endpoint` and `model` must be NUL-terminated strings; `api_key` may be
/// NULL. `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn argos_wire_new(
    endpoint: *const c_char,
    model: *const c_char,
    api_key: *const c_char,
    out: *mut *mut ArgosBackend,
) -> ArgosStatus {
    guard(|| {
        if out.is_null() {
            return fail(ArgosStatus::NullArgument, "out is null");
        }
        let (endpoint, model) = match (str_arg(endpoint, "endpoint"), str_arg(model, "model")) {
            (Ok(e), Ok(m)) => (e, m),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let mut config = WireConfig::new(endpoint, model);
        if !api_key.is_null() {
            match str_arg(api_key, "api_key") {
                Ok(k) => config.api_key = Some(k.to_string()),
                Err(s) => return s,
            }
        }
        *out = Box::into_raw(Box::new(ArgosBackend(Box::new(WireBackend::new(config)))));
        ArgosStatus::Ok
    })
}

/// # Safety
/// `backend` must be NULL or a pointer from a backend constructor that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn argos_backend_free(backend: *mut ArgosBackend) {
    if !backend.is_null() {
        drop(Box::from_raw(backend));
    }
}

/// Solve one problem. `config` may be NULL for defaults.
///
/// # Safety
/// `problem` and `backend` must be live handles, `config` NULL or a valid
/// pointer, and `out` a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn argos_solve(
    problem: *const ArgosProblem,
    backend: *const ArgosBackend,
    config: *const ArgosConfig,
    out: *mut *mut ArgosResult,
) -> ArgosStatus {
    guard(|| {
        if problem.is_null() || backend.is_null() || out.is_null() {
            return fail(ArgosStatus::NullArgument, "problem, backend and out must be non-null");
        }
        let config = if config.is_null() {
            EngineConfig::default()
        } else {
            EngineConfig::from(&*config)
        };
        match solve(&(*problem).0, &config, (*backend).0.as_ref()) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(ArgosResult(r)));
                ArgosStatus::Ok
            }
            Err(argos::engine::EngineError::Backend(e)) => fail(ArgosStatus::BackendError, e),
            Err(e) => fail(ArgosStatus::EngineError, e),
        }
    })
}

/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_verdict(result: *const ArgosResult) -> bool {
    (*result).0.verdict
}

/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_decided_by(result: *const ArgosResult) -> ArgosDecidedBy {
    (*result).0.decided_by.into()
}

/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_confidence(result: *const ArgosResult) -> f64 {
    (*result).0.confidence
}

/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_clause_count(result: *const ArgosResult) -> usize {
    (*result).0.commonsense.len()
}

/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_cot_calls(result: *const ArgosResult) -> usize {
    (*result).0.cot_calls
}

/// Text of accepted clause `index`, or NULL when out of range. Free with
/// [`argos_string_free`].
///
/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_clause(result: *const ArgosResult, index: usize) -> *mut c_char {
    let result = &(*result).0;
    result
        .commonsense
        .get(index)
        .map_or(ptr::null_mut(), |c| owned(c.text()))
}

/// One-line summary, e.g. `False (sat, 3 clauses)`. Free with
/// [`argos_string_free`].
///
/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_summary(result: *const ArgosResult) -> *mut c_char {
    owned((*result).0.to_string())
}

/// The run's trace, one JSON event per line. Free with
/// [`argos_string_free`].
///
/// # Safety
/// `result` must be a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_trace_jsonl(result: *const ArgosResult) -> *mut c_char {
    owned((*result).0.trace.to_jsonl())
}

/// # Safety
/// `result` must be NULL or a live handle from [`argos_solve`].
#[no_mangle]
pub unsafe extern "C" fn argos_result_free(result: *mut ArgosResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn argos_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
