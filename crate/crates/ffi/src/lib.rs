//! C ABI over the qubrain models and metrics.
//!
//! Every fallible function returns a [`QbStatus`]; on failure a message is
//! available from [`qb_last_error_message`] on the same thread. Panics never
//! cross the boundary and are reported as [`QbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use qubrain::autodiff::Tensor;
use qubrain::bench::{confusion, prf1, roc_auc, Checkpoint, THRESHOLD};
use qubrain::error::Error;
use qubrain::models::{build_model, predict, Model, ModelKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownModel = 3,
    Dimension = 4,
    Domain = 5,
    Normalization = 6,
    UndefinedMetric = 7,
    Incompatible = 8,
    Corrupt = 9,
    Io = 10,
    Config = 11,
    Other = 12,
    Panic = 13,
}

/// Opaque handle to a model and its parameters.
pub struct QbModel {
    inner: Box<dyn Model>,
}

/// Confusion counts and the derived rates at the 0.5 threshold.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QbPrf1 {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension(_) | Error::Bounds(_) | Error::Capacity { .. } => QbStatus::Dimension,
            Error::Domain(_) => QbStatus::Domain,
            Error::Normalization(_) => QbStatus::Normalization,
            Error::UndefinedMetric(_) => QbStatus::UndefinedMetric,
            Error::Incompatible(_) => QbStatus::Incompatible,
            Error::Corrupt(_) => QbStatus::Corrupt,
            Error::Io { .. } => QbStatus::Io,
            Error::Config(_) => QbStatus::Config,
            _ => QbStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QbStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QbStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            QbStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(QbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(QbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

fn model_kind(id: &str) -> Result<ModelKind, Failure> {
    id.parse()
        .map_err(|_| Failure(QbStatus::UnknownModel, format!("unknown model id {id:?}")))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn qb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds model `model_id` with parameters drawn from `seed`.
///
/// # Safety
/// `model_id` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_model_new(
    model_id: *const c_char,
    seed: u64,
    out: *mut *mut QbModel,
) -> QbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = model_kind(str_arg(model_id, "model_id")?)?;
        let m = Box::new(QbModel {
            inner: build_model(kind, seed),
        });
        *out = Box::into_raw(m);
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_model_free(model: *mut QbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const QbModel) -> Result<&'a QbModel, Failure> {
    model.as_ref().ok_or_else(|| null("model"))
}

/// Number of scalar parameters of `model`.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qb_model_param_count(model: *const QbModel, out: *mut usize) -> QbStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.inner.param_count();
        Ok(())
    })
}

/// Expected parameter count of architecture `model_id`.
///
/// # Safety
/// `model_id` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_expected_param_count(
    model_id: *const c_char,
    out: *mut usize,
) -> QbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = model_kind(str_arg(model_id, "model_id")?)?.expected_param_count();
        Ok(())
    })
}

/// Positive-class scores for `rows` row-major feature rows of width `cols`,
/// written to `scores[0..rows]`. Features must already be preprocessed.
///
/// # Safety
/// `features` must hold `rows * cols` values and `scores` room for `rows`.
#[no_mangle]
pub unsafe extern "C" fn qb_model_predict(
    model: *const QbModel,
    features: *const f64,
    rows: usize,
    cols: usize,
    scores: *mut f64,
) -> QbStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(QbStatus::Dimension, "rows * cols overflows".into()))?;
        let x = slice_arg(features, n, "features")?;
        if rows > 0 && scores.is_null() {
            return Err(null("scores"));
        }
        let s = predict(m.inner.as_ref(), &Tensor::matrix(rows, cols, x.to_vec())?)?;
        if rows > 0 {
            slice::from_raw_parts_mut(scores, rows).copy_from_slice(&s);
        }
        Ok(())
    })
}

/// Writes a checkpoint of `model` to `path`, tagged with `seed` and `epoch`.
///
/// # Safety
/// `model` must be valid and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qb_model_save(
    model: *const QbModel,
    path: *const c_char,
    seed: u64,
    epoch: usize,
) -> QbStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = str_arg(path, "path")?;
        Checkpoint::capture(m.inner.as_ref(), seed, epoch).save(Path::new(path))?;
        Ok(())
    })
}

/// Reads a checkpoint and builds the model it holds. `*out` is untouched on failure.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_model_load(path: *const c_char, out: *mut *mut QbModel) -> QbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ck = Checkpoint::load(Path::new(str_arg(path, "path")?))?;
        let kind: ModelKind = ck.model.parse().map_err(|_| {
            Failure(
                QbStatus::Incompatible,
                format!("checkpoint holds unknown model {:?}", ck.model),
            )
        })?;
        let mut inner = build_model(kind, ck.seed);
        ck.restore(inner.as_mut())?;
        *out = Box::into_raw(Box::new(QbModel { inner }));
        Ok(())
    })
}

/// Loads a checkpoint into an existing model of the same architecture.
///
/// # Safety
/// `model` must be valid and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qb_model_restore(model: *mut QbModel, path: *const c_char) -> QbStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let ck = Checkpoint::load(Path::new(str_arg(path, "path")?))?;
        ck.restore(m.inner.as_mut())?;
        Ok(())
    })
}

/// Rank-based ROC AUC of `n` scores against 0/1 labels.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qb_roc_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> QbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = roc_auc(
            slice_arg(scores, n, "scores")?,
            slice_arg(labels, n, "labels")?,
        )?;
        Ok(())
    })
}

/// Confusion counts, precision, recall and F1 of `n` scores at threshold 0.5.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qb_prf1(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut QbPrf1,
) -> QbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = confusion(
            slice_arg(scores, n, "scores")?,
            slice_arg(labels, n, "labels")?,
            THRESHOLD,
        )?;
        let (precision, recall, f1) = prf1(&c);
        *out = QbPrf1 {
            true_pos: c.tp as u64,
            true_neg: c.tn as u64,
            false_pos: c.fp as u64,
            false_neg: c.fn_ as u64,
            precision,
            recall,
            f1,
        };
        Ok(())
    })
}
