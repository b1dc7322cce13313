//! C ABI over `cascade_asr`.
//!
//! Every fallible call returns a [`CasrStatus`]. On failure the message is
//! kept per thread and can be read with [`casr_last_error`]. Objects are
//! opaque handles created by `*_new`/`*_load` calls and released by the
//! matching `*_free`. Strings returned through out-parameters are released
//! with [`casr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cascade_asr::cascade::TwoStageDecoder;
use cascade_asr::ctc::{ctc_loss_and_grad, Alphabet, LabelSequence, PosteriorMatrix};
use cascade_asr::decode::{prefix_beam_search, rescore, DecodeConfig};
use cascade_asr::frontend::{compute_spectrogram, frame_count, AudioClip, FrontendConfig};
use cascade_asr::lm::ArpaModel;
use cascade_asr::nnet::Checkpoint;
use ndarray::Array2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Compute = 5,
    Panic = 6,
}

/// Dense row-major `f64` matrix.
pub struct CasrMatrix(Array2<f64>);

pub struct CasrArpaModel(ArpaModel);

pub struct CasrCheckpoint(Checkpoint);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CasrStatus, String);

impl Failure {
    fn new(status: CasrStatus, msg: impl ToString) -> Self {
        Self(status, msg.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<()>) -> CasrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CasrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CasrStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure::new(CasrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure::new(CasrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str> {
    if p.is_null() {
        return Err(Failure::new(CasrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CasrStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(CasrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn to_c_string(s: String) -> Result<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(CasrStatus::Compute, "string contains a nul byte"))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn invalid(e: impl ToString) -> Failure {
    Failure::new(CasrStatus::InvalidArgument, e)
}

fn compute(e: impl ToString) -> Failure {
    Failure::new(CasrStatus::Compute, e)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn casr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn casr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of feature frames for a clip of `duration_s` seconds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn casr_frame_count(duration_s: f64, out: *mut usize) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = frame_count(duration_s).map_err(invalid)?;
        Ok(())
    })
}

/// Copies `rows * cols` values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn casr_matrix_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut CasrMatrix,
) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let n = rows.checked_mul(cols).ok_or_else(|| invalid("matrix too large"))?;
        let values = slice(data, n, "data")?.to_vec();
        let m = Array2::from_shape_vec((rows, cols), values).map_err(invalid)?;
        *out = boxed(CasrMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn casr_matrix_rows(m: *const CasrMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `m` must be a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn casr_matrix_cols(m: *const CasrMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.ncols())
}

/// Copies the matrix row-major into `buf`, which must hold `rows * cols`
/// values.
///
/// # Safety
/// `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn casr_matrix_copy(m: *const CasrMatrix, buf: *mut f64, len: usize) -> CasrStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        if len != m.0.len() {
            return Err(invalid(format!("buffer holds {len} values, matrix has {}", m.0.len())));
        }
        if buf.is_null() && len > 0 {
            return Err(Failure::new(CasrStatus::NullPointer, "buf is null"));
        }
        for (i, v) in m.0.iter().enumerate() {
            *buf.add(i) = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn casr_matrix_free(m: *mut CasrMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Log spectrogram of mono samples with the default frontend settings
/// (20 ms window, 10 ms hop, 161 bins, per-utterance normalization).
///
/// # Safety
/// `samples` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn casr_spectrogram(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    out: *mut *mut CasrMatrix,
) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let clip = AudioClip::new(slice(samples, len, "samples")?.to_vec(), sample_rate).map_err(invalid)?;
        let spec = compute_spectrogram(&clip, &FrontendConfig::default()).map_err(invalid)?;
        *out = boxed(CasrMatrix(spec.frames));
        Ok(())
    })
}

/// CTC loss of `labels` given pre-softmax `logits` (frames by symbols, blank
/// last). When `grad_out` is non-null it receives the logit gradient.
///
/// # Safety
/// `labels` must point to `n_labels` values; `loss_out` must be writable;
/// `grad_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn casr_ctc_loss(
    logits: *const CasrMatrix,
    labels: *const usize,
    n_labels: usize,
    loss_out: *mut f64,
    grad_out: *mut *mut CasrMatrix,
) -> CasrStatus {
    guard(|| {
        let logits = borrow(logits, "logits")?;
        let loss_out = out_ptr(loss_out, "loss_out")?;
        let target = LabelSequence::new(slice(labels, n_labels, "labels")?.to_vec());
        let blank = logits.0.ncols().checked_sub(1).ok_or_else(|| invalid("logits have no columns"))?;
        let r = ctc_loss_and_grad(&logits.0, &target, blank).map_err(invalid)?;
        *loss_out = r.loss;
        if let Some(g) = grad_out.as_mut() {
            *g = boxed(CasrMatrix(r.grad));
        }
        Ok(())
    })
}

/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn casr_arpa_parse(text: *const c_char, out: *mut *mut CasrArpaModel) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = ArpaModel::parse(c_str(text, "text")?).map_err(|e| Failure::new(CasrStatus::Parse, e))?;
        *out = boxed(CasrArpaModel(m));
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn casr_arpa_load(path: *const c_char, out: *mut *mut CasrArpaModel) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = c_str(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new(CasrStatus::Io, format!("{path}: {e}")))?;
        let m = ArpaModel::parse(&text).map_err(|e| Failure::new(CasrStatus::Parse, e))?;
        *out = boxed(CasrArpaModel(m));
        Ok(())
    })
}

/// Base-10 log probability of a whole sentence, including the end marker.
/// Out-of-vocabulary words fail unless the model maps them to `<unk>`.
///
/// # Safety
/// `lm` must be a live handle; `text` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn casr_arpa_score(
    lm: *const CasrArpaModel,
    text: *const c_char,
    log10_out: *mut f64,
) -> CasrStatus {
    guard(|| {
        let lm = borrow(lm, "lm")?;
        let out = out_ptr(log10_out, "log10_out")?;
        *out = lm.0.score_text(c_str(text, "text")?).map_err(compute)?.log10_total;
        Ok(())
    })
}

/// # Safety
/// `lm` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn casr_arpa_free(lm: *mut CasrArpaModel) {
    if !lm.is_null() {
        drop(Box::from_raw(lm));
    }
}

/// Prefix beam search over per-frame `posteriors` whose last column is the
/// blank and whose other columns follow `alphabet`. With a non-null `lm`
/// the top hypotheses are rescored with weight `alpha`.
///
/// # Safety
/// `posteriors` must be a live handle; `alphabet` nul-terminated; `lm` may be
/// null; `transcript_out` writable.
#[no_mangle]
pub unsafe extern "C" fn casr_beam_search(
    posteriors: *const CasrMatrix,
    alphabet: *const c_char,
    beam_width: usize,
    lm: *const CasrArpaModel,
    alpha: f64,
    transcript_out: *mut *mut c_char,
) -> CasrStatus {
    guard(|| {
        let posts = PosteriorMatrix::new(borrow(posteriors, "posteriors")?.0.clone()).map_err(invalid)?;
        let alphabet = Alphabet::with_blank_last(c_str(alphabet, "alphabet")?).map_err(invalid)?;
        let out = out_ptr(transcript_out, "transcript_out")?;
        if posts.symbols() != alphabet.size() {
            return Err(invalid(format!(
                "posteriors have {} columns, alphabet needs {}",
                posts.symbols(),
                alphabet.size()
            )));
        }
        let cfg = DecodeConfig {
            beam_width,
            top_n: beam_width.clamp(1, 10),
            alpha,
            ..Default::default()
        };
        cfg.validate().map_err(invalid)?;
        let hyps = prefix_beam_search(&posts, &alphabet, &cfg, None).map_err(compute)?;
        let best = match lm.as_ref() {
            Some(lm) => rescore(&hyps, &lm.0, alpha).map_err(compute)?,
            None => hyps.into_iter().next().expect("at least one hypothesis"),
        };
        *out = to_c_string(best.transcript)?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn casr_checkpoint_load(path: *const c_char, out: *mut *mut CasrCheckpoint) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = c_str(path, "path")?;
        if !std::path::Path::new(path).is_file() {
            return Err(Failure::new(CasrStatus::Io, format!("{path}: no such file")));
        }
        let ck = Checkpoint::load(path).map_err(|e| Failure::new(CasrStatus::Parse, format!("{path}: {e}")))?;
        *out = boxed(CasrCheckpoint(ck));
        Ok(())
    })
}

/// Per-frame output posteriors of the network for one utterance.
///
/// # Safety
/// `ckpt` and `features` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn casr_forward(
    ckpt: *const CasrCheckpoint,
    features: *const CasrMatrix,
    out: *mut *mut CasrMatrix,
) -> CasrStatus {
    guard(|| {
        let ck = borrow(ckpt, "ckpt")?;
        let x = borrow(features, "features")?;
        let out = out_ptr(out, "out")?;
        let posts = ck.0.posteriors(x.0.view()).map_err(invalid)?;
        *out = boxed(CasrMatrix(posts.into_inner()));
        Ok(())
    })
}

/// Decodes one utterance with the checkpoint. `config_json` may be null or
/// a JSON object of decode settings overriding the defaults. `lm` may be
/// null.
///
/// # Safety
/// Handles must be live; strings nul-terminated; `transcript_out` writable.
#[no_mangle]
pub unsafe extern "C" fn casr_decode(
    ckpt: *const CasrCheckpoint,
    features: *const CasrMatrix,
    lm: *const CasrArpaModel,
    config_json: *const c_char,
    transcript_out: *mut *mut c_char,
) -> CasrStatus {
    guard(|| {
        let ck = borrow(ckpt, "ckpt")?;
        let x = borrow(features, "features")?;
        let out = out_ptr(transcript_out, "transcript_out")?;
        let cfg: DecodeConfig = if config_json.is_null() {
            DecodeConfig::default()
        } else {
            serde_json::from_str(c_str(config_json, "config_json")?)
                .map_err(|e| Failure::new(CasrStatus::Parse, e))?
        };
        let d = TwoStageDecoder::stage1_only(&ck.0, cfg).map_err(invalid)?;
        let inf = d.infer(x.0.view(), lm.as_ref().map(|m| &m.0)).map_err(compute)?;
        *out = to_c_string(inf.transcript)?;
        Ok(())
    })
}

/// # Safety
/// `ckpt` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn casr_checkpoint_free(ckpt: *mut CasrCheckpoint) {
    if !ckpt.is_null() {
        drop(Box::from_raw(ckpt));
    }
}

/// Word error rate of `hypothesis` against a non-empty `reference`.
///
/// # Safety
/// Strings must be nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn casr_wer(hypothesis: *const c_char, reference: *const c_char, out: *mut f64) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = cascade_asr::decode::wer(c_str(hypothesis, "hypothesis")?, c_str(reference, "reference")?)
            .map_err(invalid)?;
        Ok(())
    })
}

/// Character error rate of `hypothesis` against a non-empty `reference`.
///
/// # Safety
/// Strings must be nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn casr_cer(hypothesis: *const c_char, reference: *const c_char, out: *mut f64) -> CasrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = cascade_asr::decode::cer(c_str(hypothesis, "hypothesis")?, c_str(reference, "reference")?)
            .map_err(invalid)?;
        Ok(())
    })
}
