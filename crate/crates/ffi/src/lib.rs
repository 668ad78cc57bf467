//! C ABI over the veriscribe engine.
//!
//! Datasets and LAAM models are opaque handles created by `*_read`/`*_load`
//! and released with the matching `*_free`. Every function returns a
//! [`VsStatus`]; on failure the message is kept per thread and retrieved with
//! [`vs_last_error_message`]. Panics never cross the boundary.
//!
//! All functions use the built-in feature schema.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use veriscribe::data::read_any;
use veriscribe::laam::{self, LaamModel};
use veriscribe::{builtin_schema, daam, Dataset, Error, NUM_FEATURES};

/// Number of features; `per_feature` buffers hold this many doubles.
pub const VS_NUM_FEATURES: usize = 15;

const _: () = assert!(VS_NUM_FEATURES == NUM_FEATURES);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    OutOfRange = 6,
    MissingSoft = 7,
    NotFound = 8,
    SchemaMismatch = 9,
    Internal = 99,
}

/// Loaded records.
pub struct VsDataset {
    inner: Dataset,
}

/// Trained same/different network pair.
pub struct VsLaamModel {
    inner: LaamModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(VsStatus, String);

fn status_of(e: &Error) -> VsStatus {
    match e {
        Error::Io { .. } => VsStatus::Io,
        Error::Parse { .. } => VsStatus::Parse,
        Error::OutOfRange { .. } | Error::LengthMismatch { .. } => VsStatus::OutOfRange,
        Error::MissingSoft(_) => VsStatus::MissingSoft,
        Error::SchemaMismatch(_) | Error::NonconformantVector(_) => VsStatus::SchemaMismatch,
        _ => VsStatus::Validation,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard<F>(f: F) -> VsStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (VsStatus::Ok, String::new()),
        Ok(Err(Failure(status, message))) => (status, message),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (VsStatus::Internal, format!("internal error: {msg}"))
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    status
}

fn null(what: &str) -> Failure {
    Failure(VsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(VsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn record_index(ds: &Dataset, i: usize) -> Result<(), Failure> {
    if i < ds.len() {
        Ok(())
    } else {
        Err(Failure(
            VsStatus::OutOfRange,
            format!("record index {i} out of range (dataset has {})", ds.len()),
        ))
    }
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one, so a
/// caller can size the buffer with a first call passing `len = 0`.
#[no_mangle]
pub unsafe extern "C" fn vs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Read a labels CSV (`.csv`) or soft-record file (anything else).
#[no_mangle]
pub unsafe extern "C" fn vs_dataset_read(path: *const c_char, out_dataset: *mut *mut VsDataset) -> VsStatus {
    guard(|| {
        let slot = out(out_dataset, "out_dataset")?;
        *slot = ptr::null_mut();
        let path = text(path, "path")?;
        let inner = read_any(Path::new(path), &builtin_schema())?;
        *slot = Box::into_raw(Box::new(VsDataset { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn vs_dataset_free(dataset: *mut VsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of records; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn vs_dataset_len(dataset: *const VsDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// Index of the record `writer_id/sample_id`.
#[no_mangle]
pub unsafe extern "C" fn vs_dataset_find(
    dataset: *const VsDataset,
    writer_id: *const c_char,
    sample_id: *const c_char,
    out_index: *mut usize,
) -> VsStatus {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.inner;
        let slot = out(out_index, "out_index")?;
        let (w, s) = (text(writer_id, "writer_id")?, text(sample_id, "sample_id")?);
        *slot = ds
            .find(w, s)
            .ok_or_else(|| Failure(VsStatus::NotFound, format!("no record {w}/{s}")))?;
        Ok(())
    })
}

/// Cosine similarity of two non-negative vectors of length `len`.
#[no_mangle]
pub unsafe extern "C" fn vs_cosine_sim(q: *const f64, k: *const f64, len: usize, out_sim: *mut f64) -> VsStatus {
    guard(|| {
        let slot = out(out_sim, "out_sim")?;
        *slot = daam::cosine_sim(slice(q, len, "q")?, slice(k, len, "k")?)?;
        Ok(())
    })
}

/// DAAM score of records `q` and `k`. `per_feature` may be null; otherwise
/// it receives `VS_NUM_FEATURES` similarities.
#[no_mangle]
pub unsafe extern "C" fn vs_daam_score(
    dataset: *const VsDataset,
    q: usize,
    k: usize,
    out_overall: *mut f64,
    per_feature: *mut f64,
) -> VsStatus {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.inner;
        let slot = out(out_overall, "out_overall")?;
        record_index(ds, q)?;
        record_index(ds, k)?;
        let score = daam::score_pair(ds.record(q), ds.record(k), daam::OcsMode::Mean)?;
        *slot = score.overall;
        if !per_feature.is_null() {
            std::slice::from_raw_parts_mut(per_feature, NUM_FEATURES).copy_from_slice(&score.per_feature);
        }
        Ok(())
    })
}

/// Distance code of classes `q` and `k` on zero-based feature `feature`.
#[no_mangle]
pub unsafe extern "C" fn vs_encode_distance(feature: usize, q: usize, k: usize, out_code: *mut usize) -> VsStatus {
    guard(|| {
        let slot = out(out_code, "out_code")?;
        if feature >= NUM_FEATURES {
            return Err(Failure(VsStatus::OutOfRange, format!("feature {feature} out of range")));
        }
        *slot = laam::encode_distance(&builtin_schema(), feature, q, k)?;
        Ok(())
    })
}

/// Load a model written by `veriscribe train-laam`.
#[no_mangle]
pub unsafe extern "C" fn vs_laam_model_load(path: *const c_char, out_model: *mut *mut VsLaamModel) -> VsStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = ptr::null_mut();
        let path = text(path, "path")?;
        let inner = LaamModel::load(Path::new(path), &builtin_schema())?;
        *slot = Box::into_raw(Box::new(VsLaamModel { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn vs_laam_model_free(model: *mut VsLaamModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Decision threshold stored with the model.
#[no_mangle]
pub unsafe extern "C" fn vs_laam_model_tau(model: *const VsLaamModel, out_tau: *mut f64) -> VsStatus {
    guard(|| {
        let m = &borrow(model, "model")?.inner;
        *out(out_tau, "out_tau")? = m.tau;
        Ok(())
    })
}

/// Log-likelihood ratio of records `q` and `k` (hard labels, or argmax of
/// soft vectors when present).
#[no_mangle]
pub unsafe extern "C" fn vs_laam_llr(
    model: *const VsLaamModel,
    dataset: *const VsDataset,
    q: usize,
    k: usize,
    out_llr: *mut f64,
) -> VsStatus {
    guard(|| {
        let m = &borrow(model, "model")?.inner;
        let ds = &borrow(dataset, "dataset")?.inner;
        let slot = out(out_llr, "out_llr")?;
        record_index(ds, q)?;
        record_index(ds, k)?;
        let report = veriscribe::explain::explain_laam(ds.schema(), ds.record(q), ds.record(k), m, m.tau, 0)?;
        *slot = report.overall;
        Ok(())
    })
}
