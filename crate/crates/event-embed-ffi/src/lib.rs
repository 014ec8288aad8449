//! C ABI for the event-embed library.
//!
//! Models are passed around as opaque `EeModel` handles allocated by this
//! library and released with [`ee_model_free`]. Every fallible function
//! returns an [`EeStatus`]; on failure a human-readable description is
//! available from [`ee_last_error_message`] until the next failing call on
//! the same thread. Events are written in corpus line syntax: tab-separated
//! lower-case tokens, predicate first, then argument heads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use event_embed::error::Error;
use event_embed::eval::{evaluate, predict_pair};
use event_embed::io::{parse_corpus, parse_embeddings, parse_pairs, read_model, write_model};
use event_embed::model::{init_params, score_event, Dims, Event, Mode, ModelParams};
use event_embed::train::{train, Hyperparams};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EeStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or written.
    Io = 3,
    /// An input file was malformed; the message names the line.
    Parse = 4,
    /// A contract violation such as inconsistent dimensions or empty input.
    Invalid = 5,
    /// A panic was caught at the ABI boundary.
    Panic = 6,
}

/// Composition mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EeMode {
    Full = 0,
    VerbOnly = 1,
}

impl From<EeMode> for Mode {
    fn from(mode: EeMode) -> Mode {
        match mode {
            EeMode::Full => Mode::Full,
            EeMode::VerbOnly => Mode::VerbOnly,
        }
    }
}

/// Training configuration. Obtain defaults from [`ee_hyperparams_default`]
/// and override selectively.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EeHyperparams {
    /// Ranking margin; must be positive.
    pub gamma: f64,
    /// Learning rate; must be positive.
    pub eta: f64,
    /// Weight-decay strength; must be non-negative.
    pub lambda: f64,
    pub epochs: u64,
    pub seed: u64,
    /// Word embedding width.
    pub dim_word: u32,
    /// Hidden layer width.
    pub dim_hidden: u32,
    /// Event representation width.
    pub dim_event: u32,
    pub mode: EeMode,
    pub freeze_embeddings: bool,
    pub shuffle: bool,
}

/// Evaluation counts and derived ratios.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EeMetrics {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Opaque handle to a trained model.
pub struct EeModel {
    inner: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nul bytes stripped");
    });
}

fn status_of(err: &Error) -> EeStatus {
    match err {
        Error::Parse { .. } => EeStatus::Parse,
        Error::Invalid(_) => EeStatus::Invalid,
        Error::Io(_) => EeStatus::Io,
    }
}

fn fail(status: EeStatus, message: &str) -> EeStatus {
    set_error(message);
    status
}

fn fail_with(err: &Error) -> EeStatus {
    fail(status_of(err), &err.to_string())
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn ee_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guard(body: impl FnOnce() -> EeStatus) -> EeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(EeStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to a nul-terminated string.
unsafe fn required_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, EeStatus> {
    if ptr.is_null() {
        return Err(fail(EeStatus::NullPointer, &format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(EeStatus::InvalidUtf8, &format!("{what} is not valid UTF-8")))
}

fn parse_event_line(line: &str, what: &str) -> Result<Event, EeStatus> {
    Event::from_tokens(line.split('\t'))
        .map_err(|e| fail(EeStatus::Invalid, &format!("{what}: {e}")))
}

fn read_file(path: &str) -> Result<String, EeStatus> {
    std::fs::read_to_string(path).map_err(|e| fail(EeStatus::Io, &format!("{path}: {e}")))
}

/// Default training configuration: margin 1.0, learning rate 0.01, weight
/// decay 1e-4, 200 epochs, 50/50/50 dimensions, full mode.
#[no_mangle]
pub extern "C" fn ee_hyperparams_default() -> EeHyperparams {
    let h = Hyperparams::default();
    EeHyperparams {
        gamma: h.gamma,
        eta: h.eta,
        lambda: h.lambda,
        epochs: h.epochs as u64,
        seed: h.seed,
        dim_word: h.dims.word as u32,
        dim_hidden: h.dims.hidden as u32,
        dim_event: h.dims.event as u32,
        mode: EeMode::Full,
        freeze_embeddings: h.freeze_embeddings,
        shuffle: h.shuffle,
    }
}

/// Trains a model on the corpus at `corpus_path`, optionally initializing
/// word embeddings from the text-format table at `embeddings_path` (pass
/// null to skip). On success stores a heap-allocated handle in `*out_model`.
///
/// # Safety
/// `corpus_path` must point to a nul-terminated string; `embeddings_path`
/// must be null or do the same; `hyper` must be null (defaults) or point to a
/// valid [`EeHyperparams`]; `out_model` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ee_train_file(
    corpus_path: *const c_char,
    embeddings_path: *const c_char,
    hyper: *const EeHyperparams,
    out_model: *mut *mut EeModel,
) -> EeStatus {
    guard(|| {
        if out_model.is_null() {
            return fail(EeStatus::NullPointer, "out_model is null");
        }
        let corpus_path = match required_str(corpus_path, "corpus_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let hyper = if hyper.is_null() {
            ee_hyperparams_default()
        } else {
            *hyper
        };
        let dims = Dims::new(
            hyper.dim_word as usize,
            hyper.dim_hidden as usize,
            hyper.dim_event as usize,
        );
        let hyperparams = Hyperparams {
            gamma: hyper.gamma,
            eta: hyper.eta,
            lambda: hyper.lambda,
            epochs: hyper.epochs as usize,
            seed: hyper.seed,
            mode: hyper.mode.into(),
            freeze_embeddings: hyper.freeze_embeddings,
            shuffle: hyper.shuffle,
            dims,
        };

        let corpus_text = match read_file(corpus_path) {
            Ok(text) => text,
            Err(status) => return status,
        };
        let corpus = match parse_corpus(&corpus_text) {
            Ok(corpus) => corpus,
            Err(err) => return fail_with(&err),
        };
        let sequences = corpus.all_sequences();

        let pretrained = if embeddings_path.is_null() {
            None
        } else {
            let path = match required_str(embeddings_path, "embeddings_path") {
                Ok(s) => s,
                Err(status) => return status,
            };
            let text = match read_file(path) {
                Ok(text) => text,
                Err(status) => return status,
            };
            match parse_embeddings(&text) {
                Ok(table) => Some(table),
                Err(err) => return fail_with(&err),
            }
        };

        let init = match init_params(dims, hyper.seed, pretrained.as_ref(), &corpus.vocabulary()) {
            Ok(init) => init,
            Err(err) => return fail_with(&err),
        };
        match train(&sequences, &hyperparams, init) {
            Ok((params, _)) => {
                *out_model = Box::into_raw(Box::new(EeModel { inner: params }));
                EeStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Reads a model file written by `ee_model_write_file` or the CLI.
///
/// # Safety
/// `path` must point to a nul-terminated string and `out_model` to writable
/// storage.
#[no_mangle]
pub unsafe extern "C" fn ee_model_read_file(
    path: *const c_char,
    out_model: *mut *mut EeModel,
) -> EeStatus {
    guard(|| {
        if out_model.is_null() {
            return fail(EeStatus::NullPointer, "out_model is null");
        }
        let path = match required_str(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let text = match read_file(path) {
            Ok(text) => text,
            Err(status) => return status,
        };
        match read_model(&text) {
            Ok(params) => {
                *out_model = Box::into_raw(Box::new(EeModel { inner: params }));
                EeStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Writes the model to a file in the text model format.
///
/// # Safety
/// `model` must be a live handle from this library; `path` must point to a
/// nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ee_model_write_file(
    model: *const EeModel,
    path: *const c_char,
) -> EeStatus {
    guard(|| {
        if model.is_null() {
            return fail(EeStatus::NullPointer, "model is null");
        }
        let path = match required_str(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let text = write_model(&(*model).inner);
        match std::fs::write(path, text) {
            Ok(()) => EeStatus::Ok,
            Err(e) => fail(EeStatus::Io, &format!("{path}: {e}")),
        }
    })
}

/// Releases a model handle. Passing null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn ee_model_free(model: *mut EeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores one event given in corpus line syntax.
///
/// # Safety
/// `model` must be a live handle; `event_line` must point to a
/// nul-terminated string; `out_score` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ee_event_score(
    model: *const EeModel,
    event_line: *const c_char,
    mode: EeMode,
    out_score: *mut f64,
) -> EeStatus {
    guard(|| {
        if model.is_null() || out_score.is_null() {
            return fail(EeStatus::NullPointer, "model or out_score is null");
        }
        let line = match required_str(event_line, "event_line") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let event = match parse_event_line(line, "event_line") {
            Ok(event) => event,
            Err(status) => return status,
        };
        *out_score = score_event(&event, &(*model).inner, mode.into());
        EeStatus::Ok
    })
}

/// Predicts whether the first event stereotypically precedes the second
/// (strict score comparison; ties predict false).
///
/// # Safety
/// `model` must be a live handle; both event lines must point to
/// nul-terminated strings; `out_before` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ee_predict_pair(
    model: *const EeModel,
    first_line: *const c_char,
    second_line: *const c_char,
    mode: EeMode,
    out_before: *mut bool,
) -> EeStatus {
    guard(|| {
        if model.is_null() || out_before.is_null() {
            return fail(EeStatus::NullPointer, "model or out_before is null");
        }
        let first = match required_str(first_line, "first_line")
            .and_then(|s| parse_event_line(s, "first_line"))
        {
            Ok(event) => event,
            Err(status) => return status,
        };
        let second = match required_str(second_line, "second_line")
            .and_then(|s| parse_event_line(s, "second_line"))
        {
            Ok(event) => event,
            Err(status) => return status,
        };
        *out_before = predict_pair(&first, &second, &(*model).inner, mode.into());
        EeStatus::Ok
    })
}

/// Evaluates the model on a labeled pairs file; fills `*out_metrics`.
///
/// # Safety
/// `model` must be a live handle; `pairs_path` must point to a
/// nul-terminated string; `out_metrics` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ee_evaluate_pairs_file(
    model: *const EeModel,
    pairs_path: *const c_char,
    mode: EeMode,
    out_metrics: *mut EeMetrics,
) -> EeStatus {
    guard(|| {
        if model.is_null() || out_metrics.is_null() {
            return fail(EeStatus::NullPointer, "model or out_metrics is null");
        }
        let path = match required_str(pairs_path, "pairs_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let text = match read_file(path) {
            Ok(text) => text,
            Err(status) => return status,
        };
        let pairs = match parse_pairs(&text) {
            Ok(pairs) => pairs,
            Err(err) => return fail_with(&err),
        };
        match evaluate(&pairs, &(*model).inner, mode.into()) {
            Ok(m) => {
                *out_metrics = EeMetrics {
                    true_positives: m.true_positives as u64,
                    false_positives: m.false_positives as u64,
                    false_negatives: m.false_negatives as u64,
                    true_negatives: m.true_negatives as u64,
                    precision: m.precision,
                    recall: m.recall,
                    f1: m.f1,
                };
                EeStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}
