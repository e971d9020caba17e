//! C ABI for the scenario query engine.
//!
//! Programs, traces and maps are opaque heap handles released with their
//! `_free` function. Every fallible call returns an [`SqStatus`]; on failure
//! the message is available from [`sq_last_error_message`] on the same
//! thread. Strings returned through `char **` are owned by the caller and
//! released with [`sq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Duration;

use squery::compiler::{self, CompileOptions};
use squery::query::{self, Program, QueryError, QueryOptions};
use squery::synth;
use squery::trace::LabelTrace;
use squery::world::RoadMap;

/// Compiled scenario program.
pub struct SqProgram(Program);

/// Validated label trace.
pub struct SqTrace(LabelTrace);

/// Road map.
pub struct SqMap(RoadMap);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    /// The query ran and found no match.
    NoMatch = 1,
    NullArgument = 2,
    InvalidUtf8 = 3,
    Io = 4,
    Parse = 5,
    Compile = 6,
    Trace = 7,
    Map = 8,
    Config = 9,
    Eval = 10,
    Timeout = 11,
    Panic = 12,
}

/// Machine serialization format.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqFormat {
    Json = 0,
    Dot = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Fallible<T> = Result<T, (SqStatus, String)>;

fn guard(f: impl FnOnce() -> Fallible<SqStatus>) -> SqStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SqStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return Err((SqStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Fallible<&'a T> {
    p.as_ref()
        .ok_or_else(|| (SqStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Fallible<SqStatus> {
    if out.is_null() {
        return Err((SqStatus::NullArgument, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(SqStatus::Ok)
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Fallible<SqStatus> {
    if out.is_null() {
        return Err((SqStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| (SqStatus::Panic, "string contains NUL".to_string()))?;
    *out = c.into_raw();
    Ok(SqStatus::Ok)
}

fn read(path: &str) -> Fallible<String> {
    std::fs::read_to_string(path).map_err(|e| (SqStatus::Io, format!("cannot read {path}: {e}")))
}

fn query_status(e: &QueryError) -> SqStatus {
    match e {
        QueryError::Dsl(_) => SqStatus::Parse,
        QueryError::Compile(_) => SqStatus::Compile,
        QueryError::Trace(_) => SqStatus::Trace,
        QueryError::Eval(_) => SqStatus::Eval,
        QueryError::Config(_) => SqStatus::Config,
        QueryError::Timeout { .. } => SqStatus::Timeout,
    }
}

fn compile(src: &str) -> Fallible<Program> {
    Program::from_source(src, &CompileOptions::default()).map_err(|e| (query_status(&e), e.to_string()))
}

/// Parse and compile a program from source text.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_program_from_source(source: *const c_char, out: *mut *mut SqProgram) -> SqStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        put(out, SqProgram(compile(src)?))
    })
}

/// Parse and compile a program file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_program_load(path: *const c_char, out: *mut *mut SqProgram) -> SqStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, SqProgram(compile(&read(p)?)?))
    })
}

/// # Safety
/// `program` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_program_free(program: *mut SqProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Parse and validate a trace from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_trace_from_json(json: *const c_char, out: *mut *mut SqTrace) -> SqStatus {
    guard(|| {
        let s = str_arg(json, "json")?;
        let t = LabelTrace::from_json_str(s).map_err(|e| (SqStatus::Trace, e.to_string()))?;
        put(out, SqTrace(t))
    })
}

/// Load and validate a trace file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_trace_load(path: *const c_char, out: *mut *mut SqTrace) -> SqStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let t = LabelTrace::load(Path::new(p)).map_err(|e| match e {
            squery::trace::TraceError::Io { .. } => (SqStatus::Io, e.to_string()),
            _ => (SqStatus::Trace, e.to_string()),
        })?;
        put(out, SqTrace(t))
    })
}

/// # Safety
/// `trace` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_trace_free(trace: *mut SqTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Parse and validate a road map from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_map_from_json(json: *const c_char, out: *mut *mut SqMap) -> SqStatus {
    guard(|| {
        let s = str_arg(json, "json")?;
        let m = RoadMap::from_json_str(s).map_err(|e| (SqStatus::Map, e.to_string()))?;
        put(out, SqMap(m))
    })
}

/// Load and validate a road map file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_map_load(path: *const c_char, out: *mut *mut SqMap) -> SqStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let m = RoadMap::load(Path::new(p)).map_err(|e| match e {
            squery::world::MapError::Io { .. } => (SqStatus::Io, e.to_string()),
            _ => (SqStatus::Map, e.to_string()),
        })?;
        put(out, SqMap(m))
    })
}

/// The default straight two-lane road.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_map_default(out: *mut *mut SqMap) -> SqStatus {
    guard(|| put(out, SqMap(synth::default_map())))
}

/// # Safety
/// `map` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_map_free(map: *mut SqMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

unsafe fn run(
    program: *const SqProgram,
    trace: *const SqTrace,
    map: *const SqMap,
    min_duration: usize,
    timeout_secs: f64,
) -> Fallible<query::QueryResult> {
    let p = ref_arg(program, "program")?;
    let t = ref_arg(trace, "trace")?;
    let default_map;
    let m = match map.as_ref() {
        Some(m) => &m.0,
        None => {
            default_map = synth::default_map();
            &default_map
        }
    };
    let opts = QueryOptions {
        find_all: false,
        timeout: (timeout_secs.is_finite() && timeout_secs > 0.0).then(|| Duration::from_secs_f64(timeout_secs)),
    };
    query::query(&p.0, &t.0, min_duration, m, &opts).map_err(|e| (query_status(&e), e.to_string()))
}

/// Decide whether the trace matches the program for some window of
/// `min_duration` frames. Returns `SQ_STATUS_OK` on a match and
/// `SQ_STATUS_NO_MATCH` otherwise. A null `map` selects the default road;
/// a non-positive `timeout_secs` disables the timeout.
///
/// # Safety
/// Handles must be valid or null (null `program`/`trace` is an error).
#[no_mangle]
pub unsafe extern "C" fn sq_query(
    program: *const SqProgram,
    trace: *const SqTrace,
    map: *const SqMap,
    min_duration: usize,
    timeout_secs: f64,
) -> SqStatus {
    guard(|| {
        let r = run(program, trace, map, min_duration, timeout_secs)?;
        Ok(if r.matched { SqStatus::Ok } else { SqStatus::NoMatch })
    })
}

/// Like [`sq_query`], writing the full result as JSON to `out_json`.
/// Returns `SQ_STATUS_OK` whenever the query completed.
///
/// # Safety
/// Handles must be valid or null; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_query_json(
    program: *const SqProgram,
    trace: *const SqTrace,
    map: *const SqMap,
    min_duration: usize,
    timeout_secs: f64,
    out_json: *mut *mut c_char,
) -> SqStatus {
    guard(|| {
        let r = run(program, trace, map, min_duration, timeout_secs)?;
        put_string(out_json, r.to_json())
    })
}

/// Serialize the program's state machines.
///
/// # Safety
/// `program` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_compile_emit(
    program: *const SqProgram,
    format: SqFormat,
    out: *mut *mut c_char,
) -> SqStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let text = match format {
            SqFormat::Json => compiler::to_json(&p.0.bundle),
            SqFormat::Dot => compiler::to_dot(&p.0.bundle),
        };
        put_string(out, text)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
