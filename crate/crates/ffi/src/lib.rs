//! C ABI over the `sorc` library.
//!
//! Objects are opaque handles owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`SorcStatus`];
//! on failure [`sorc_last_error`] describes the error for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sorc::container::{load_stack, save_stack};
use sorc::preprocess::{apply_setup, MsLevel, PreprocParams, PreprocSetup};
use sorc::scoring::normalized_mean_ranks;
use sorc::similarity::{build_similarity_matrix, SimilarityFunctionId, SimilarityMatrix, SimilarityParams};
use sorc::stack::{MassChannelStack, Plane};
use sorc::synthetic::{generate_synthetic, Regularity, SyntheticSpec};
use sorc::workflow::{run_workflow, RunOptions, WorkflowConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SorcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Compute = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Mass channel stack.
pub struct SorcStack {
    inner: MassChannelStack,
}

/// Pairwise channel similarity matrix.
pub struct SorcMatrix {
    inner: SimilarityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: SorcStatus, message: impl ToString) -> SorcStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> SorcStatus) -> SorcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SorcStatus::Panic, "internal panic"),
    }
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, SorcStatus> {
    if s.is_null() {
        return Err(fail(SorcStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(SorcStatus::InvalidArgument, "string argument is not UTF-8"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message of the last failed call on this thread. Valid until the next
/// call on the same thread.
#[no_mangle]
pub extern "C" fn sorc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sorc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a stack container from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sorc_stack_load(path: *const c_char, out: *mut *mut SorcStack) -> SorcStatus {
    guard(|| {
        if out.is_null() {
            return fail(SorcStatus::NullPointer, "null output pointer");
        }
        let path = tri!(c_str(path));
        match load_stack(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SorcStack { inner }));
                SorcStatus::Ok
            }
            Err(sorc::container::ContainerError::Io { path, source }) => {
                fail(SorcStatus::Io, format!("{path}: {source}"))
            }
            Err(e) => fail(SorcStatus::Format, e),
        }
    })
}

/// Writes `stack` as a container to `path`.
///
/// # Safety
/// `stack` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sorc_stack_save(stack: *const SorcStack, path: *const c_char) -> SorcStatus {
    guard(|| {
        let Some(stack) = stack.as_ref() else {
            return fail(SorcStatus::NullPointer, "null stack");
        };
        let path = tri!(c_str(path));
        match save_stack(&stack.inner, path) {
            Ok(()) => SorcStatus::Ok,
            Err(e) => fail(SorcStatus::Io, e),
        }
    })
}

/// Height, width and channel count of `stack`. Null outputs are skipped.
///
/// # Safety
/// `stack` must come from this library; outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn sorc_stack_dims(
    stack: *const SorcStack,
    height: *mut usize,
    width: *mut usize,
    channels: *mut usize,
) -> SorcStatus {
    guard(|| {
        let Some(stack) = stack.as_ref() else {
            return fail(SorcStatus::NullPointer, "null stack");
        };
        let s = &stack.inner;
        for (ptr, v) in [(height, s.height()), (width, s.width()), (channels, s.channels())] {
            if let Some(p) = ptr.as_mut() {
                *p = v;
            }
        }
        SorcStatus::Ok
    })
}

/// # Safety
/// `stack` must come from this library or be null; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sorc_stack_free(stack: *mut SorcStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// Generates a synthetic stack. `regularity` is "high", "medium" or "low".
/// When `labels` is non-null it receives `clusters * per_cluster` 1-based
/// ground-truth labels.
///
/// # Safety
/// `regularity` must be NUL-terminated, `out` valid, and `labels` null or
/// writable for `clusters * per_cluster` elements.
#[no_mangle]
pub unsafe extern "C" fn sorc_synthetic(
    regularity: *const c_char,
    clusters: usize,
    per_cluster: usize,
    noise: f64,
    seed: u64,
    size: usize,
    out: *mut *mut SorcStack,
    labels: *mut usize,
) -> SorcStatus {
    guard(|| {
        if out.is_null() {
            return fail(SorcStatus::NullPointer, "null output pointer");
        }
        let regularity: Regularity = match tri!(c_str(regularity)).parse() {
            Ok(r) => r,
            Err(e) => return fail(SorcStatus::InvalidArgument, e),
        };
        let spec = SyntheticSpec::new(regularity, per_cluster, clusters, noise, seed).with_size(size, size);
        match generate_synthetic(&spec) {
            Ok(data) => {
                if !labels.is_null() {
                    ptr::copy_nonoverlapping(data.labels.as_ptr(), labels, data.labels.len());
                }
                *out = Box::into_raw(Box::new(SorcStack { inner: data.stack }));
                SorcStatus::Ok
            }
            Err(e) => fail(SorcStatus::InvalidArgument, e),
        }
    })
}

/// Pre-processes `stack` with the given setup and computes the similarity
/// matrix of `function` (a name such as "pearson" or "mssim") with default
/// parameters. `ms_level` is 0, 1 or 2.
///
/// # Safety
/// `stack` must come from this library, `function` be NUL-terminated and
/// `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sorc_similarity_matrix(
    stack: *const SorcStack,
    pp: bool,
    ms_level: u8,
    function: *const c_char,
    out: *mut *mut SorcMatrix,
) -> SorcStatus {
    guard(|| {
        let Some(stack) = stack.as_ref() else {
            return fail(SorcStatus::NullPointer, "null stack");
        };
        if out.is_null() {
            return fail(SorcStatus::NullPointer, "null output pointer");
        }
        let function: SimilarityFunctionId = match tri!(c_str(function)).parse() {
            Ok(f) => f,
            Err(e) => return fail(SorcStatus::InvalidArgument, e),
        };
        let Some(ms) = MsLevel::from_index(ms_level) else {
            return fail(SorcStatus::InvalidArgument, format!("ms level {ms_level} not in 0..=2"));
        };
        let setup = PreprocSetup { pp, ms };
        let prepared = match apply_setup(&stack.inner.normalize_channels(), setup, &PreprocParams::default()) {
            Ok(p) => p,
            Err(e) => return fail(SorcStatus::Compute, e),
        };
        match build_similarity_matrix(&prepared.stacks, function, &SimilarityParams::default()) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(SorcMatrix {
                    inner: m.with_setup(setup),
                }));
                SorcStatus::Ok
            }
            Err(e) => fail(SorcStatus::Compute, e),
        }
    })
}

/// Number of channels (rows) of `matrix`.
///
/// # Safety
/// `matrix` must come from this library and `size` be valid.
#[no_mangle]
pub unsafe extern "C" fn sorc_matrix_size(matrix: *const SorcMatrix, size: *mut usize) -> SorcStatus {
    guard(|| match (matrix.as_ref(), size.as_mut()) {
        (Some(m), Some(s)) => {
            *s = m.inner.size();
            SorcStatus::Ok
        }
        _ => fail(SorcStatus::NullPointer, "null argument"),
    })
}

unsafe fn copy_matrix(
    matrix: *const SorcMatrix,
    buffer: *mut f64,
    len: usize,
    pick: fn(&SimilarityMatrix) -> &Plane,
) -> SorcStatus {
    guard(|| {
        let Some(m) = matrix.as_ref() else {
            return fail(SorcStatus::NullPointer, "null matrix");
        };
        if buffer.is_null() {
            return fail(SorcStatus::NullPointer, "null buffer");
        }
        let values = pick(&m.inner);
        if len < values.len() {
            return fail(
                SorcStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", values.len()),
            );
        }
        for (k, v) in values.iter().enumerate() {
            *buffer.add(k) = *v;
        }
        SorcStatus::Ok
    })
}

/// Copies the normalized similarities, row-major, into `buffer`.
///
/// # Safety
/// `matrix` must come from this library; `buffer` must be writable for
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sorc_matrix_copy_normalized(
    matrix: *const SorcMatrix,
    buffer: *mut f64,
    len: usize,
) -> SorcStatus {
    copy_matrix(matrix, buffer, len, |m| &m.normalized)
}

/// Copies the raw similarities, row-major, into `buffer`. Failed pairs are
/// NaN.
///
/// # Safety
/// As for [`sorc_matrix_copy_normalized`].
#[no_mangle]
pub unsafe extern "C" fn sorc_matrix_copy_raw(matrix: *const SorcMatrix, buffer: *mut f64, len: usize) -> SorcStatus {
    copy_matrix(matrix, buffer, len, |m| &m.raw)
}

/// # Safety
/// `matrix` must come from this library or be null; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sorc_matrix_free(matrix: *mut SorcMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Mean ranks of `values` divided by `n`, written to `out`; the best value
/// receives 1.
///
/// # Safety
/// `values` must be readable and `out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sorc_normalized_ranks(
    values: *const f64,
    n: usize,
    higher_is_better: bool,
    out: *mut f64,
) -> SorcStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return fail(SorcStatus::NullPointer, "null buffer");
        }
        if n == 0 {
            return fail(SorcStatus::InvalidArgument, "empty input");
        }
        let input = std::slice::from_raw_parts(values, n);
        let ranks = normalized_mean_ranks(input, higher_is_better);
        ptr::copy_nonoverlapping(ranks.as_ptr(), out, n);
        SorcStatus::Ok
    })
}

/// Runs the workflow described by the TOML file at `config_path`.
/// `threads` of 0 keeps the config's value. `exit_code` (optional) receives
/// the command-line exit status: 0 ok, 1 config, 2 input, 3 internal.
///
/// # Safety
/// `config_path` must be NUL-terminated; `exit_code` valid or null.
#[no_mangle]
pub unsafe extern "C" fn sorc_run_workflow(
    config_path: *const c_char,
    threads: usize,
    exit_code: *mut i32,
) -> SorcStatus {
    guard(|| {
        let path = PathBuf::from(tri!(c_str(config_path)));
        let set_code = |c: i32| {
            if let Some(p) = exit_code.as_mut() {
                *p = c;
            }
        };
        let config = match WorkflowConfig::load(&path) {
            Ok(c) => c,
            Err(e) => {
                set_code(1);
                return fail(SorcStatus::InvalidArgument, e);
            }
        };
        let options = RunOptions {
            threads: (threads > 0).then_some(threads),
            ..RunOptions::default()
        };
        match run_workflow(&config, &options) {
            Ok(_) => {
                set_code(0);
                SorcStatus::Ok
            }
            Err(e) => {
                set_code(e.exit_code());
                let status = match e.exit_code() {
                    1 => SorcStatus::InvalidArgument,
                    2 => SorcStatus::Format,
                    _ => SorcStatus::Compute,
                };
                fail(status, e)
            }
        }
    })
}
