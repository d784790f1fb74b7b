//! C ABI for loading embeddings and running the evaluation primitives.
//!
//! Every fallible call returns an [`EkStatus`]; on failure a description is
//! available from [`ek_last_error`] on the same thread until the next call.
//! Handles are opaque and must be released with [`ek_embeddings_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use embedkit::embio::load_embeddings;
use embedkit::eval::{cosine_similarity, nearest_neighbors, spearman_rho, word_vector};
use embedkit::{EmbeddingSet, Error};

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EkStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    NotFound = 5,
    Undefined = 6,
    InvalidInput = 7,
    BufferTooSmall = 8,
    OutOfRange = 9,
    Panic = 10,
    Other = 11,
}

/// Loaded embeddings. Opaque to C.
pub struct EkEmbeddings {
    set: EmbeddingSet,
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

fn status_of(err: &Error) -> EkStatus {
    match err {
        Error::Io { .. } => EkStatus::Io,
        Error::Decode { .. } | Error::Parse { .. } | Error::Integrity(_) => EkStatus::Parse,
        Error::NotFound(_) => EkStatus::NotFound,
        Error::Undefined(_) => EkStatus::Undefined,
        Error::Input(_) | Error::Config(_) => EkStatus::InvalidInput,
        _ => EkStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into a status and last error.
fn guard(f: impl FnOnce() -> Result<(), (EkStatus, String)>) -> EkStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EkStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (EkStatus, String)>;
}

impl<T> IntoFfi<T> for embedkit::Result<T> {
    fn ffi(self) -> Result<T, (EkStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (EkStatus, String) {
    (EkStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EkStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(h: *const EkEmbeddings) -> Result<&'a EkEmbeddings, (EkStatus, String)> {
    h.as_ref().ok_or_else(|| null("embeddings handle"))
}

/// Loads embeddings from `path` (the `.emb1` sidecar when present) into
/// `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_load(path: *const c_char, out: *mut *mut EkEmbeddings) -> EkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path, "path")?);
        let set = load_embeddings(&path).ffi()?;
        *out = Box::into_raw(Box::new(EkEmbeddings { set }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must come from [`ek_embeddings_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_free(h: *mut EkEmbeddings) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Vector dimension, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_dim(h: *const EkEmbeddings) -> usize {
    h.as_ref().map_or(0, |h| h.set.dim())
}

/// Vocabulary size, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_len(h: *const EkEmbeddings) -> usize {
    h.as_ref().map_or(0, |h| h.set.len())
}

/// Copies the word with vocabulary id `index` into `buf` as a
/// NUL-terminated string. `*needed` receives the size including the NUL,
/// also when `buf` is too small.
///
/// # Safety
/// `buf` must be writable for `buf_len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_word_at(
    h: *const EkEmbeddings,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    needed: *mut usize,
) -> EkStatus {
    guard(|| {
        let h = handle(h)?;
        if index >= h.set.len() {
            return Err((EkStatus::OutOfRange, format!("index {index} >= {}", h.set.len())));
        }
        let word = h.set.word(index as u32).as_bytes();
        if !needed.is_null() {
            *needed = word.len() + 1;
        }
        if buf.is_null() || buf_len < word.len() + 1 {
            return Err((EkStatus::BufferTooSmall, format!("need {} bytes", word.len() + 1)));
        }
        ptr::copy_nonoverlapping(word.as_ptr(), buf.cast::<u8>(), word.len());
        *buf.add(word.len()) = 0;
        Ok(())
    })
}

/// Writes the vector of `word` (n-gram composition for unknown words when
/// the model has subwords) into `out`, which holds `out_len` floats.
///
/// # Safety
/// `word` must be NUL-terminated; `out` writable for `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_word_vector(
    h: *const EkEmbeddings,
    word: *const c_char,
    out: *mut f32,
    out_len: usize,
) -> EkStatus {
    guard(|| {
        let h = handle(h)?;
        let word = str_arg(word, "word")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < h.set.dim() {
            return Err((EkStatus::BufferTooSmall, format!("need {} floats", h.set.dim())));
        }
        let v = word_vector(&h.set, word).ffi()?;
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// Cosine similarity of two words.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_cosine(
    h: *const EkEmbeddings,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> EkStatus {
    guard(|| {
        let h = handle(h)?;
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let va = word_vector(&h.set, a).ffi()?;
        let vb = word_vector(&h.set, b).ffi()?;
        *out = cosine_similarity(&va, &vb).ffi()?;
        Ok(())
    })
}

/// Up to `k` nearest vocabulary words to `word`, best first. Ids go to
/// `out_ids`, cosines to `out_scores` (either may be null) and the number
/// written to `*out_count`.
///
/// # Safety
/// `out_ids` and `out_scores` must be null or writable for `k` elements.
#[no_mangle]
pub unsafe extern "C" fn ek_embeddings_nearest(
    h: *const EkEmbeddings,
    word: *const c_char,
    k: usize,
    out_ids: *mut u32,
    out_scores: *mut f64,
    out_count: *mut usize,
) -> EkStatus {
    guard(|| {
        let h = handle(h)?;
        let word = str_arg(word, "word")?;
        if out_count.is_null() {
            return Err(null("out_count"));
        }
        *out_count = 0;
        let list = nearest_neighbors(&h.set, word, k).ffi()?;
        for (n, (w, c)) in list.iter().enumerate() {
            if !out_ids.is_null() {
                *out_ids.add(n) = h.set.id(w).expect("neighbour is in the vocabulary");
            }
            if !out_scores.is_null() {
                *out_scores.add(n) = *c;
            }
        }
        *out_count = list.len();
        Ok(())
    })
}

/// Spearman rank correlation of two series of length `n`.
///
/// # Safety
/// `gold` and `predicted` must be readable for `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ek_spearman(gold: *const f64, predicted: *const f64, n: usize, out: *mut f64) -> EkStatus {
    guard(|| {
        if gold.is_null() || predicted.is_null() || out.is_null() {
            return Err(null("series or out"));
        }
        let g = std::slice::from_raw_parts(gold, n);
        let p = std::slice::from_raw_parts(predicted, n);
        *out = spearman_rho(g, p).ffi()?;
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next `ek_` call on the same thread.
#[no_mangle]
pub extern "C" fn ek_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn ek_status_name(status: EkStatus) -> *const c_char {
    let name: &'static CStr = match status {
        EkStatus::Ok => c"ok",
        EkStatus::NullArgument => c"null argument",
        EkStatus::InvalidUtf8 => c"invalid UTF-8",
        EkStatus::Io => c"I/O error",
        EkStatus::Parse => c"parse error",
        EkStatus::NotFound => c"not found",
        EkStatus::Undefined => c"undefined",
        EkStatus::InvalidInput => c"invalid input",
        EkStatus::BufferTooSmall => c"buffer too small",
        EkStatus::OutOfRange => c"out of range",
        EkStatus::Panic => c"panic",
        EkStatus::Other => c"error",
    };
    name.as_ptr()
}
