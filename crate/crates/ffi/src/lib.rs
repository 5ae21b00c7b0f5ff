//! C interface to mcr-graph.
//!
//! Every function returns an [`McrStatus`]. On failure a description is
//! kept per thread and can be read with [`mcr_last_error`]. Objects cross
//! the boundary as opaque handles that the caller frees with the matching
//! `*_free` function; strings returned by the library are freed with
//! [`mcr_string_free`].

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcr_graph::astgraph::{parse_source, AstGraph};
use mcr_graph::evalcli::predict_report;
use mcr_graph::graphlearn::{Checkpoint, Task};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    SyntaxError = 3,
    Io = 4,
    InvalidModel = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A parsed MiniJ file together with its source text.
pub struct McrGraph {
    graph: AstGraph,
    source: String,
}

/// A trained checkpoint.
pub struct McrModel {
    checkpoint: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type Failure = (McrStatus, String);

/// Runs `f`, recording its error and turning panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> McrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            McrStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            McrStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (McrStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|e| (McrStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        (
            McrStatus::InvalidArgument,
            "output contains a NUL byte".into(),
        )
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mcr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mcr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mcr_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses MiniJ `source` into a program graph.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_graph_parse(
    source: *const c_char,
    out: *mut *mut McrGraph,
) -> McrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller contract.
        let src = unsafe { read_str(source, "source") }?;
        let graph = parse_source(src).map_err(|e| (McrStatus::SyntaxError, e.to_string()))?;
        let handle = Box::new(McrGraph {
            graph,
            source: src.to_string(),
        });
        // SAFETY: `out` is non-null and writable per the caller contract.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// # Safety
/// `graph` must be null or a live handle from `mcr_graph_parse`.
#[no_mangle]
pub unsafe extern "C" fn mcr_graph_free(graph: *mut McrGraph) {
    if !graph.is_null() {
        // SAFETY: allocated by Box::into_raw in mcr_graph_parse.
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Number of AST nodes.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_graph_node_count(
    graph: *const McrGraph,
    out: *mut usize,
) -> McrStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { graph.as_ref() }.ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null and writable.
        unsafe { *out = g.graph.nodes.len() };
        Ok(())
    })
}

/// Number of source lines.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_graph_line_count(graph: *const McrGraph, out: *mut u32) -> McrStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { graph.as_ref() }.ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null and writable.
        unsafe { *out = g.graph.line_count };
        Ok(())
    })
}

/// The graph as JSON. Free the result with `mcr_string_free`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_graph_to_json(
    graph: *const McrGraph,
    out: *mut *mut c_char,
) -> McrStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { graph.as_ref() }.ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = serde_json::to_string(&g.graph)
            .map_err(|e| (McrStatus::InvalidArgument, e.to_string()))?;
        let s = into_c_string(json)?;
        // SAFETY: non-null and writable.
        unsafe { *out = s };
        Ok(())
    })
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_model_load(path: *const c_char, out: *mut *mut McrModel) -> McrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: forwarded caller contract.
        let path = unsafe { read_str(path, "path") }?;
        let text =
            std::fs::read_to_string(path).map_err(|e| (McrStatus::Io, format!("{path}: {e}")))?;
        let checkpoint = Checkpoint::from_json(&text)
            .map_err(|e| (McrStatus::InvalidModel, format!("{path}: {e}")))?;
        // SAFETY: non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(McrModel { checkpoint })) };
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle from `mcr_model_load`.
#[no_mangle]
pub unsafe extern "C" fn mcr_model_free(model: *mut McrModel) {
    if !model.is_null() {
        // SAFETY: allocated by Box::into_raw in mcr_model_load.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Writes the likelihood score of each source line into `scores`.
/// `written` receives the line count; when `capacity` is smaller nothing
/// is written to `scores` and `BufferTooSmall` is returned.
///
/// # Safety
/// Handles must be live; `scores` must hold `capacity` doubles; `written`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_predict_line_scores(
    model: *const McrModel,
    graph: *const McrGraph,
    scores: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> McrStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (m, g) = unsafe { (model.as_ref(), graph.as_ref()) };
        let (m, g) = (
            m.ok_or_else(|| null("model"))?,
            g.ok_or_else(|| null("graph"))?,
        );
        if written.is_null() {
            return Err(null("written"));
        }
        let doc = report(m, g, 0.5)?;
        // SAFETY: non-null and writable.
        unsafe { *written = doc.lines.len() };
        if doc.lines.len() > capacity {
            return Err((
                McrStatus::BufferTooSmall,
                format!("{} lines, capacity {capacity}", doc.lines.len()),
            ));
        }
        if !doc.lines.is_empty() {
            if scores.is_null() {
                return Err(null("scores"));
            }
            // SAFETY: `scores` holds at least `capacity >= len` doubles.
            let dst = unsafe { std::slice::from_raw_parts_mut(scores, doc.lines.len()) };
            for (d, l) in dst.iter_mut().zip(&doc.lines) {
                *d = l.score;
            }
        }
        Ok(())
    })
}

/// Annotated text listing of the file: lines whose score reaches
/// `threshold` are marked. Free the result with `mcr_string_free`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcr_predict_report(
    model: *const McrModel,
    graph: *const McrGraph,
    threshold: f64,
    out: *mut *mut c_char,
) -> McrStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (m, g) = unsafe { (model.as_ref(), graph.as_ref()) };
        let (m, g) = (
            m.ok_or_else(|| null("model"))?,
            g.ok_or_else(|| null("graph"))?,
        );
        if out.is_null() {
            return Err(null("out"));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err((
                McrStatus::InvalidArgument,
                format!("threshold {threshold} outside [0, 1]"),
            ));
        }
        let s = into_c_string(report(m, g, threshold)?.to_text())?;
        // SAFETY: non-null and writable.
        unsafe { *out = s };
        Ok(())
    })
}

fn report(
    m: &McrModel,
    g: &McrGraph,
    threshold: f64,
) -> Result<mcr_graph::evalcli::ReportDocument, Failure> {
    if m.checkpoint.model.config.task != Task::Likelihood {
        return Err((McrStatus::InvalidModel, "not a likelihood model".into()));
    }
    predict_report(
        "",
        &g.graph,
        &g.source,
        &m.checkpoint.model,
        None,
        None,
        threshold,
    )
    .map_err(|e| (McrStatus::InvalidModel, e.to_string()))
}
