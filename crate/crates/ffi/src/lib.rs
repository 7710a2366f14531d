//! C ABI over the `attloc` tagger.
//!
//! Every fallible function returns an [`AttlocStatus`]; on failure a
//! description is available from [`attloc_last_error`] on the same thread.
//! Models are opaque handles created by [`attloc_model_load`] and released
//! with [`attloc_model_free`]. Mel input is row-major `n_frames × 40` raw
//! log-mel energies; the checkpoint's normalization is applied internally.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use attloc::checkpoint::Checkpoint;
use attloc::data::{read_wav, NUM_TAGS};
use attloc::features::{apply_norm, FeatureExtractor, MelChunk, N_MELS};
use attloc::metrics::eer_of;
use attloc::model::{forward, ForwardTrace, ModelMode};
use attloc::numerics::Matrix;
use attloc::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttlocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Unreadable or malformed input file.
    Data = 3,
    Checkpoint = 4,
    /// Shape mismatch or non-finite value during computation.
    Numeric = 5,
    /// Output buffer too small; the required size was written back.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque model handle.
pub struct AttlocModel {
    ckpt: Checkpoint,
    features: FeatureExtractor,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(AttlocStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Checkpoint(_) => AttlocStatus::Checkpoint,
            Error::Shape(_) | Error::NonFinite(_) | Error::Numeric(_) => AttlocStatus::Numeric,
            Error::Usage(_) | Error::Config(_) => AttlocStatus::InvalidArgument,
            _ => AttlocStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AttlocStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AttlocStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AttlocStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AttlocStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const AttlocModel) -> Result<&'a AttlocModel, Failure> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(AttlocStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn mel_arg(model: &AttlocModel, mel: *const f64, n_frames: usize) -> Result<MelChunk, Failure> {
    if mel.is_null() {
        return Err(null("mel"));
    }
    if n_frames == 0 {
        return Err(Failure(AttlocStatus::InvalidArgument, "n_frames must be at least 1".into()));
    }
    let len = n_frames
        .checked_mul(N_MELS)
        .ok_or_else(|| Failure(AttlocStatus::InvalidArgument, "n_frames is too large".into()))?;
    let data = slice::from_raw_parts(mel, len).to_vec();
    let chunk = MelChunk::new(Matrix::from_vec(n_frames, N_MELS, data)?)?;
    Ok(apply_norm(&chunk, &model.ckpt.norm))
}

fn run(model: &AttlocModel, chunk: &MelChunk) -> Result<ForwardTrace, Failure> {
    Ok(forward(chunk, &model.ckpt.params, model.ckpt.mode)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn attloc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of tags per output vector (7).
#[no_mangle]
pub extern "C" fn attloc_num_tags() -> usize {
    NUM_TAGS
}

/// Mel bands per input frame (40).
#[no_mangle]
pub extern "C" fn attloc_num_mels() -> usize {
    N_MELS
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn attloc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a checkpoint file into a new handle stored in `*out_model`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn attloc_model_load(path: *const c_char, out_model: *mut *mut AttlocModel) -> AttlocStatus {
    guard(|| {
        if out_model.is_null() {
            return Err(null("out_model"));
        }
        *out_model = ptr::null_mut();
        let path = path_arg(path)?;
        let ckpt = Checkpoint::load(path.as_ref())?;
        *out_model = Box::into_raw(Box::new(AttlocModel { ckpt, features: FeatureExtractor::new() }));
        Ok(())
    })
}

/// Releases a handle from [`attloc_model_load`]. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn attloc_model_free(model: *mut AttlocModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes 1 for an attention/localization model and 0 for the baseline.
///
/// # Safety
/// `model` must be a live handle and `out_is_attloc` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn attloc_model_is_attloc(model: *const AttlocModel, out_is_attloc: *mut i32) -> AttlocStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_is_attloc.as_mut().ok_or_else(|| null("out_is_attloc"))?;
        *out = i32::from(m.ckpt.mode == ModelMode::AttLoc);
        Ok(())
    })
}

/// Log-mel features of a WAV file. Writes the frame count to `*out_frames`;
/// when `capacity_frames` is smaller, returns `BUFFER_TOO_SMALL` without
/// touching `out_mel` (which may then be NULL).
///
/// # Safety
/// `path` must be NUL-terminated, `out_frames` valid, and `out_mel` valid for
/// `capacity_frames × 40` doubles unless it is NULL.
#[no_mangle]
pub unsafe extern "C" fn attloc_wav_log_mel(
    model: *const AttlocModel,
    path: *const c_char,
    out_mel: *mut f64,
    capacity_frames: usize,
    out_frames: *mut usize,
) -> AttlocStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = path_arg(path)?;
        let frames = out_frames.as_mut().ok_or_else(|| null("out_frames"))?;
        let mel = m.features.extract(&read_wav(&path)?)?;
        *frames = mel.num_frames();
        if capacity_frames < mel.num_frames() || out_mel.is_null() {
            return Err(Failure(
                AttlocStatus::BufferTooSmall,
                format!("need room for {} frames, got {capacity_frames}", mel.num_frames()),
            ));
        }
        let data = mel.frames().data();
        slice::from_raw_parts_mut(out_mel, data.len()).copy_from_slice(data);
        Ok(())
    })
}

/// Chunk-level tag posteriors (7 values) for a log-mel chunk.
///
/// # Safety
/// `mel` must hold `n_frames × 40` doubles and `out_probs` room for 7.
#[no_mangle]
pub unsafe extern "C" fn attloc_predict(
    model: *const AttlocModel,
    mel: *const f64,
    n_frames: usize,
    out_probs: *mut f64,
) -> AttlocStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out_probs.is_null() {
            return Err(null("out_probs"));
        }
        let trace = run(m, &mel_arg(m, mel, n_frames)?)?;
        slice::from_raw_parts_mut(out_probs, NUM_TAGS).copy_from_slice(&trace.output);
        Ok(())
    })
}

/// Per-frame attention (`n_frames`), localization and tag posteriors
/// (`n_frames × 7` each, row-major). Any output pointer may be NULL.
///
/// # Safety
/// `mel` must hold `n_frames × 40` doubles; each non-NULL output must have
/// room for its documented size.
#[no_mangle]
pub unsafe extern "C" fn attloc_localize(
    model: *const AttlocModel,
    mel: *const f64,
    n_frames: usize,
    out_z_att: *mut f64,
    out_z_loc: *mut f64,
    out_frame_probs: *mut f64,
) -> AttlocStatus {
    guard(|| {
        let m = model_ref(model)?;
        let trace = run(m, &mel_arg(m, mel, n_frames)?)?;
        if !out_z_att.is_null() {
            slice::from_raw_parts_mut(out_z_att, n_frames).copy_from_slice(&trace.z_att);
        }
        for (dst, src) in [(out_z_loc, &trace.z_loc), (out_frame_probs, &trace.o)] {
            if !dst.is_null() {
                slice::from_raw_parts_mut(dst, n_frames * NUM_TAGS).copy_from_slice(src.data());
            }
        }
        Ok(())
    })
}

/// Equal error rate of `n` scores against binary labels (nonzero = positive).
/// Fails with `INVALID_ARGUMENT` when only one class is present.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out_eer` must be valid.
#[no_mangle]
pub unsafe extern "C" fn attloc_eer(scores: *const f64, labels: *const u8, n: usize, out_eer: *mut f64) -> AttlocStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() {
            return Err(null("scores/labels"));
        }
        let out = out_eer.as_mut().ok_or_else(|| null("out_eer"))?;
        let s = slice::from_raw_parts(scores, n);
        let l = slice::from_raw_parts(labels, n);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Failure(AttlocStatus::Numeric, "scores must be finite".into()));
        }
        let items: Vec<(f64, bool)> = s.iter().zip(l).map(|(v, t)| (*v, *t != 0)).collect();
        *out = eer_of(&items)
            .ok_or_else(|| Failure(AttlocStatus::InvalidArgument, "EER needs both positive and negative items".into()))?;
        Ok(())
    })
}
