//! C interface to tempojd.
//!
//! Every fallible function returns a [`TjdStatus`]. On failure a message is
//! kept for the calling thread and can be read with [`tjd_last_error`] until
//! the next call into the library. Objects are opaque handles: each
//! constructor writes a new handle through its `out` argument, and the
//! caller releases it with the matching `*_free` function. Free functions
//! accept null.
//!
//! Arrays are copied into caller buffers; a buffer shorter than the data
//! gives [`TjdStatus::BufferTooSmall`] and leaves the buffer untouched.
//! Matrices are `n * n` doubles in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tempojd::jointdiag::{joint_diagonalise_batch, reconstruct_average, JdOptions, JdResult};
use tempojd::modes::{decompose, ModeOptions, ModeReport};
use tempojd::netcore::trace::ingest_trace;
use tempojd::netcore::{ContactEvent, NodeId, StaticGraph, TemporalNetwork, TraceFormat};
use tempojd::pipeline::{run_command, run_repro, Command, PipelineConfig, RunStatus};
use tempojd::sampler::io::{load_batch, save_batch};
use tempojd::sampler::{sample_batch, SampleBatch, Source};
use tempojd::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TjdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Unreadable, malformed or unsuitable input data.
    DataError = 3,
    /// Joint diagonalisation hit its sweep limit. Results are still
    /// written through `out` and must be freed.
    NotConverged = 4,
    BufferTooSmall = 5,
    /// A bug inside the library; the message has details.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TjdTraceFormat {
    Csv = 0,
    Whitespace = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TjdCommand {
    Synth = 0,
    Sample = 1,
    Analyse = 2,
    Sir = 3,
    /// The full chain, as one experiment of `repro`.
    Repro = 4,
}

/// One contact between nodes `a` and `b` over `[start, end]` seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TjdContact {
    pub a: usize,
    pub b: usize,
    pub start: f64,
    pub end: f64,
}

/// A contact trace.
pub struct TjdNetwork(TemporalNetwork);

/// A batch of spanning-tree samples.
pub struct TjdBatch(SampleBatch);

/// A joint diagonalisation result.
pub struct TjdJd(JdResult);

/// A mode decomposition.
pub struct TjdModes(ModeReport);

struct Failure {
    status: TjdStatus,
    msg: String,
}

impl Failure {
    fn new(status: TjdStatus, msg: impl Into<String>) -> Self {
        Failure {
            status,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) => TjdStatus::InvalidArgument,
            Error::NotConverged { .. } => TjdStatus::NotConverged,
            _ => TjdStatus::DataError,
        };
        Failure::new(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<TjdStatus>) -> TjdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(fail)) => {
            set_error(fail.msg);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TjdStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure::new(TjdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::new(TjdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(TjdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn check_out<T>(out: *mut *mut T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::new(TjdStatus::NullPointer, "output pointer is null"));
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> FfiResult<TjdStatus> {
    if len < src.len() {
        return Err(Failure::new(
            TjdStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(TjdStatus::Ok);
    }
    if buf.is_null() {
        return Err(Failure::new(TjdStatus::NullPointer, "buffer is null"));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(TjdStatus::Ok)
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tjd_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string has an interior NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn tjd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

// ---- networks ----

/// Reads a trace file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tjd_network_load(
    path: *const c_char,
    format: TjdTraceFormat,
    granularity: f64,
    out: *mut *mut TjdNetwork,
) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        let path = text(path, "path")?;
        let format = match format {
            TjdTraceFormat::Csv => TraceFormat::Csv,
            TjdTraceFormat::Whitespace => TraceFormat::Whitespace,
        };
        let net = ingest_trace(Path::new(path), format, granularity)?;
        put(out, TjdNetwork(net));
        Ok(TjdStatus::Ok)
    })
}

/// Builds a trace from `count` contacts over nodes `0..n_nodes`.
///
/// # Safety
/// `contacts` must point to `count` readable values (or be null with
/// `count == 0`) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_network_from_contacts(
    n_nodes: usize,
    contacts: *const TjdContact,
    count: usize,
    granularity: f64,
    out: *mut *mut TjdNetwork,
) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        if contacts.is_null() && count > 0 {
            return Err(Failure::new(TjdStatus::NullPointer, "contacts is null"));
        }
        let slice = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(contacts, count)
        };
        let events = slice
            .iter()
            .map(|c| ContactEvent::new(NodeId(c.a), NodeId(c.b), c.start, c.end))
            .collect::<Result<Vec<_>, _>>()?;
        let net = TemporalNetwork::new(n_nodes, events, granularity)?;
        put(out, TjdNetwork(net));
        Ok(TjdStatus::Ok)
    })
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_network_node_count(net: *const TjdNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.n_nodes())
}

/// Contact count after merging, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_network_contact_count(net: *const TjdNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.events().len())
}

/// # Safety
/// `net` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tjd_network_free(net: *mut TjdNetwork) {
    free(net)
}

// ---- batches ----

/// Draws `m` flooding trees with uniform roots and start times. A
/// non-positive or infinite `horizon` means no horizon.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_sample(
    net: *const TjdNetwork,
    m: usize,
    seed: u64,
    horizon: f64,
    out: *mut *mut TjdBatch,
) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        let net = handle(net, "network")?;
        let horizon = if horizon > 0.0 { horizon } else { f64::INFINITY };
        let batch = sample_batch(Source::Temporal(&net.0), m, seed, horizon)?;
        put(out, TjdBatch(batch));
        Ok(TjdStatus::Ok)
    })
}

/// Draws `m` BFS trees from a static graph given as `n_edges` node pairs
/// (`2 * n_edges` indices).
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable indices (or be null with
/// `n_edges == 0`) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_sample_graph(
    n_nodes: usize,
    edges: *const usize,
    n_edges: usize,
    m: usize,
    seed: u64,
    out: *mut *mut TjdBatch,
) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        if edges.is_null() && n_edges > 0 {
            return Err(Failure::new(TjdStatus::NullPointer, "edges is null"));
        }
        let flat = if n_edges == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(edges, 2 * n_edges)
        };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        let g = StaticGraph::from_edges(n_nodes, &pairs)?;
        let batch = sample_batch(Source::Static(&g), m, seed, f64::INFINITY)?;
        put(out, TjdBatch(batch));
        Ok(TjdStatus::Ok)
    })
}

/// Reads a batch file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_load(path: *const c_char, out: *mut *mut TjdBatch) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        let path = text(path, "path")?;
        put(out, TjdBatch(load_batch(Path::new(path))?));
        Ok(TjdStatus::Ok)
    })
}

/// Writes a batch file.
///
/// # Safety
/// `batch` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_save(batch: *const TjdBatch, path: *const c_char) -> TjdStatus {
    guard(|| {
        let batch = handle(batch, "batch")?;
        let path = text(path, "path")?;
        save_batch(&batch.0, Path::new(path))?;
        Ok(TjdStatus::Ok)
    })
}

/// A new batch holding only the trees that reached every node.
///
/// # Safety
/// `batch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_complete_only(batch: *const TjdBatch, out: *mut *mut TjdBatch) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        let batch = handle(batch, "batch")?;
        put(out, TjdBatch(batch.0.complete_only()));
        Ok(TjdStatus::Ok)
    })
}

/// Sample count, or 0 for a null handle.
///
/// # Safety
/// `batch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_len(batch: *const TjdBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.len())
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `batch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_node_count(batch: *const TjdBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.0.n_nodes)
}

/// # Safety
/// `batch` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tjd_batch_free(batch: *mut TjdBatch) {
    free(batch)
}

// ---- joint diagonalisation ----

/// Jointly diagonalises the batch's tree matrices. On
/// [`TjdStatus::NotConverged`] the result is still written to `out`.
///
/// # Safety
/// `batch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_run(
    batch: *const TjdBatch,
    tol: f64,
    max_sweeps: usize,
    out: *mut *mut TjdJd,
) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        let batch = handle(batch, "batch")?;
        let result = joint_diagonalise_batch(&batch.0, JdOptions { tol, max_sweeps })?;
        let status = if result.converged {
            TjdStatus::Ok
        } else {
            set_error(format!("no convergence after {} sweeps", result.sweeps));
            TjdStatus::NotConverged
        };
        put(out, TjdJd(result));
        Ok(status)
    })
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `jd` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_dim(jd: *const TjdJd) -> usize {
    jd.as_ref().map_or(0, |j| j.0.n())
}

/// Number of jointly diagonalised matrices, or 0 for a null handle.
///
/// # Safety
/// `jd` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_sample_count(jd: *const TjdJd) -> usize {
    jd.as_ref().map_or(0, |j| j.0.deviations.len())
}

/// Sweeps performed, or 0 for a null handle.
///
/// # Safety
/// `jd` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_sweeps(jd: *const TjdJd) -> usize {
    jd.as_ref().map_or(0, |j| j.0.sweeps)
}

/// Per-sample deviations (`tjd_jd_sample_count` values).
///
/// # Safety
/// `jd` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_deviations(jd: *const TjdJd, buf: *mut f64, len: usize) -> TjdStatus {
    guard(|| copy_out(&handle(jd, "result")?.0.deviations, buf, len))
}

/// The orthogonal basis, `dim * dim` values, columns as basis vectors.
///
/// # Safety
/// `jd` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_basis(jd: *const TjdJd, buf: *mut f64, len: usize) -> TjdStatus {
    guard(|| copy_out(handle(jd, "result")?.0.basis.matrix().as_slice(), buf, len))
}

/// The average graph `U diag(C) Uᵀ`, `dim * dim` values.
///
/// # Safety
/// `jd` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_average(jd: *const TjdJd, buf: *mut f64, len: usize) -> TjdStatus {
    guard(|| {
        let hbar = reconstruct_average(&handle(jd, "result")?.0, true)?;
        copy_out(hbar.as_slice(), buf, len)
    })
}

/// # Safety
/// `jd` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tjd_jd_free(jd: *mut TjdJd) {
    free(jd)
}

// ---- modes ----

/// Joint diagonalisation, mixture selection over `1..=k_max` components and
/// per-mode average graphs, with default tolerances. On
/// [`TjdStatus::NotConverged`] the report is still written to `out`.
///
/// # Safety
/// `batch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_decompose(
    batch: *const TjdBatch,
    k_max: usize,
    seed: u64,
    out: *mut *mut TjdModes,
) -> TjdStatus {
    guard(|| {
        check_out(out)?;
        let batch = handle(batch, "batch")?;
        let opts = ModeOptions {
            k_max,
            seed,
            ..ModeOptions::default()
        };
        let report = decompose(&batch.0, &opts)?;
        let status = if report.all_converged() {
            TjdStatus::Ok
        } else {
            set_error("a joint diagonalisation did not converge".into());
            TjdStatus::NotConverged
        };
        put(out, TjdModes(report));
        Ok(status)
    })
}

/// Selected mixture order, or 0 for a null handle.
///
/// # Safety
/// `modes` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_k(modes: *const TjdModes) -> usize {
    modes.as_ref().map_or(0, |m| m.0.model.k)
}

/// Samples in the report, or 0 for a null handle.
///
/// # Safety
/// `modes` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_sample_count(modes: *const TjdModes) -> usize {
    modes.as_ref().map_or(0, |m| m.0.model.assignments.len())
}

/// Mode of every sample (`tjd_modes_sample_count` values).
///
/// # Safety
/// `modes` must be a live handle and `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_assignments(modes: *const TjdModes, buf: *mut usize, len: usize) -> TjdStatus {
    guard(|| copy_out(&handle(modes, "report")?.0.model.assignments, buf, len))
}

/// Members of `mode`, or 0 when the mode is empty or the handle null.
///
/// # Safety
/// `modes` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_member_count(modes: *const TjdModes, mode: usize) -> usize {
    modes.as_ref().and_then(|m| m.0.entry(mode)).map_or(0, |e| e.count())
}

/// Average graph of `mode`, `n * n` values.
///
/// # Safety
/// `modes` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_hbar(modes: *const TjdModes, mode: usize, buf: *mut f64, len: usize) -> TjdStatus {
    guard(|| {
        let report = &handle(modes, "report")?.0;
        let entry = report
            .entry(mode)
            .ok_or_else(|| Failure::new(TjdStatus::InvalidArgument, format!("mode {mode} is empty or absent")))?;
        copy_out(entry.hbar.as_slice(), buf, len)
    })
}

/// # Safety
/// `modes` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tjd_modes_free(modes: *mut TjdModes) {
    free(modes)
}

// ---- pipeline ----

/// Runs a pipeline command from a JSON config into `out_dir`, as the
/// command-line tool does.
///
/// # Safety
/// `config_json` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tjd_pipeline_run(
    command: TjdCommand,
    config_json: *const c_char,
    out_dir: *const c_char,
) -> TjdStatus {
    guard(|| {
        let cfg = PipelineConfig::from_json(text(config_json, "config")?)?;
        let out = Path::new(text(out_dir, "output directory")?);
        let status = match command {
            TjdCommand::Synth => run_command(Command::Synth, &cfg, out)?,
            TjdCommand::Sample => run_command(Command::Sample, &cfg, out)?,
            TjdCommand::Analyse => run_command(Command::Analyse, &cfg, out)?,
            TjdCommand::Sir => run_command(Command::Sir, &cfg, out)?,
            TjdCommand::Repro => run_repro(std::slice::from_ref(&cfg), out)?,
        };
        Ok(match status {
            RunStatus::Ok => TjdStatus::Ok,
            RunStatus::NotConverged => {
                set_error("outputs written, but a joint diagonalisation did not converge".into());
                TjdStatus::NotConverged
            }
        })
    })
}
