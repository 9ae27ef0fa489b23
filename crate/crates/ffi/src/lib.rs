//! C ABI over the synboot tagger, n-gram model, frequency tables and
//! manifest verification.
//!
//! Every fallible function returns an [`SbStatus`]; on failure the message is
//! available from [`sb_last_error`] on the same thread. Handles are opaque and
//! must be released with their `_free` function. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`sb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use synboot::corpus::tokenize;
use synboot::lexicon::{sample_same_pos, FrequencyTable, Granularity};
use synboot::ngram::{train_ngram, NGramModel, NGramOptions};
use synboot::tagger::TaggerModel;
use synboot::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    UnknownPosKey = 6,
    InsufficientBin = 7,
    RankDeficient = 8,
    Usage = 9,
    Verification = 10,
    Panic = 11,
}

impl From<&Error> for SbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } | Error::Stream(_) => SbStatus::Io,
            Error::Parse { .. } => SbStatus::Parse,
            Error::InvalidInput(_) => SbStatus::InvalidInput,
            Error::UnknownPosKey(_) => SbStatus::UnknownPosKey,
            Error::InsufficientBin(_) => SbStatus::InsufficientBin,
            Error::RankDeficient => SbStatus::RankDeficient,
            Error::Usage(_) => SbStatus::Usage,
            Error::Verification(_) => SbStatus::Verification,
        }
    }
}

struct Failure(SbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(SbStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SbStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    // SAFETY: the caller passes either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(SbStatus::NullArgument, format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    // SAFETY: as above, for out-parameters.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(SbStatus::NullArgument, format!("{what} is null")))
}

fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(SbStatus::NullArgument, format!("{what} is null")));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(SbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn opt_text<'a>(p: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

fn give_string(s: String, out: *mut *mut c_char) -> FfiResult<()> {
    let slot = out_ptr(out, "out")?;
    let c = CString::new(s).map_err(|_| Failure(SbStatus::InvalidInput, "string contains NUL".into()))?;
    *slot = c.into_raw();
    Ok(())
}

fn give_handle<T>(v: T, out: *mut *mut T) -> FfiResult<()> {
    let slot = out_ptr(out, "out")?;
    *slot = Box::into_raw(Box::new(v));
    Ok(())
}

fn open(path: &str) -> FfiResult<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f))
}

fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: p came from Box::into_raw in give_handle and is freed once.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned through an out-parameter of this
/// library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

pub struct SbTagger(TaggerModel);

pub struct SbNgram(NGramModel);

pub struct SbFreqTable(FrequencyTable);

/// Load a tagger model file.
#[no_mangle]
pub extern "C" fn sb_tagger_load(path: *const c_char, out: *mut *mut SbTagger) -> SbStatus {
    guard(|| {
        let path = text(path, "path")?;
        let m = TaggerModel::read(open(path)?)?;
        give_handle(SbTagger(m), out)
    })
}

/// Tokenize and tag one utterance. The result has one line per token:
/// `form TAB UPOS TAB XPOS`, with `_` for a missing XPOS.
#[no_mangle]
pub extern "C" fn sb_tagger_tag(tagger: *const SbTagger, utterance: *const c_char, out: *mut *mut c_char) -> SbStatus {
    guard(|| {
        let t = non_null(tagger, "tagger")?;
        let forms = tokenize(text(utterance, "utterance")?);
        let mut s = String::new();
        for (form, label) in forms.iter().zip(t.0.tag(&forms)) {
            s.push_str(&format!(
                "{form}\t{}\t{}\n",
                label.upos,
                label.xpos.as_deref().unwrap_or("_")
            ));
        }
        give_string(s, out)
    })
}

#[no_mangle]
pub extern "C" fn sb_tagger_free(tagger: *mut SbTagger) {
    free_handle(tagger);
}

/// Load an n-gram model file.
#[no_mangle]
pub extern "C" fn sb_ngram_load(path: *const c_char, out: *mut *mut SbNgram) -> SbStatus {
    guard(|| {
        let path = text(path, "path")?;
        let m = NGramModel::read(open(path)?)?;
        give_handle(SbNgram(m), out)
    })
}

/// Train a model on newline-separated sentences of space-separated tokens.
#[no_mangle]
pub extern "C" fn sb_ngram_train(
    sentences: *const c_char,
    order: usize,
    discount: f64,
    unk_threshold: u64,
    out: *mut *mut SbNgram,
) -> SbStatus {
    guard(|| {
        let corpus: Vec<Vec<&str>> = text(sentences, "sentences")?
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        let opts = NGramOptions {
            order,
            discount,
            unk_threshold,
        };
        let m = train_ngram(&corpus, opts)?;
        give_handle(SbNgram(m), out)
    })
}

/// Known forms, excluding `<s>`, `</s>` and `<unk>`.
#[no_mangle]
pub extern "C" fn sb_ngram_vocab_size(model: *const SbNgram) -> usize {
    non_null(model, "model").map_or(0, |m| m.0.vocabulary().count())
}

/// Natural-log probability of a space-separated token sequence.
#[no_mangle]
pub extern "C" fn sb_ngram_sentence_logprob(model: *const SbNgram, tokens: *const c_char, out: *mut f64) -> SbStatus {
    guard(|| {
        let m = non_null(model, "model")?;
        let toks: Vec<&str> = text(tokens, "tokens")?.split_whitespace().collect();
        *out_ptr(out, "out")? = m.0.sentence_logprob(&toks);
        Ok(())
    })
}

/// Best filler for position `mask_index` among space-separated `candidates`
/// (NULL for the whole model vocabulary).
#[no_mangle]
pub extern "C" fn sb_ngram_masked_argmax(
    model: *const SbNgram,
    tokens: *const c_char,
    mask_index: usize,
    candidates: *const c_char,
    out_form: *mut *mut c_char,
    out_score: *mut f64,
) -> SbStatus {
    guard(|| {
        let m = non_null(model, "model")?;
        let toks: Vec<&str> = text(tokens, "tokens")?.split_whitespace().collect();
        let cands: Vec<&str> = match opt_text(candidates, "candidates")? {
            Some(c) => c.split_whitespace().collect(),
            None => m.0.vocabulary().collect(),
        };
        let (form, score) = m.0.masked_argmax(&toks, mask_index, &cands)?;
        if !out_score.is_null() {
            *out_ptr(out_score, "out_score")? = score;
        }
        give_string(form, out_form)
    })
}

#[no_mangle]
pub extern "C" fn sb_ngram_free(model: *mut SbNgram) {
    free_handle(model);
}

/// Load a frequency table written by the `perturb` command.
#[no_mangle]
pub extern "C" fn sb_freq_load(path: *const c_char, fine: bool, out: *mut *mut SbFreqTable) -> SbStatus {
    guard(|| {
        let path = text(path, "path")?;
        let g = if fine { Granularity::Fine } else { Granularity::Coarse };
        let t = FrequencyTable::read_tsv(open(path)?, g)?;
        give_handle(SbFreqTable(t), out)
    })
}

#[no_mangle]
pub extern "C" fn sb_freq_count(
    table: *const SbFreqTable,
    key: *const c_char,
    form: *const c_char,
    out: *mut u64,
) -> SbStatus {
    guard(|| {
        let t = non_null(table, "table")?;
        *out_ptr(out, "out")? = t.0.count(text(key, "key")?, text(form, "form")?);
        Ok(())
    })
}

/// Frequency-weighted draw from class `key`, avoiding `exclude` (may be
/// NULL) unless it is the only form. Deterministic in `(seed, index)`.
#[no_mangle]
pub extern "C" fn sb_freq_sample(
    table: *const SbFreqTable,
    key: *const c_char,
    exclude: *const c_char,
    seed: u64,
    index: u64,
    out: *mut *mut c_char,
) -> SbStatus {
    guard(|| {
        let t = non_null(table, "table")?;
        let mut rng = synboot::rng::stream(seed, "ffi/sample", index);
        let s = sample_same_pos(&t.0, text(key, "key")?, opt_text(exclude, "exclude")?, &mut rng)?;
        give_string(s.form, out)
    })
}

#[no_mangle]
pub extern "C" fn sb_freq_free(table: *mut SbFreqTable) {
    free_handle(table);
}

/// Recompute every hash a run manifest lists.
#[no_mangle]
pub extern "C" fn sb_verify_manifest(path: *const c_char, out_checked: *mut usize) -> SbStatus {
    guard(|| {
        let n = synboot::cli::verify_manifest(Path::new(text(path, "path")?))?;
        if !out_checked.is_null() {
            *out_ptr(out_checked, "out_checked")? = n;
        }
        Ok(())
    })
}
