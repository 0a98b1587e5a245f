//! C ABI over the policylens core.
//!
//! Every fallible call returns a [`PlStatus`]; on failure the message is
//! available from [`pl_last_error`] on the same thread. Strings handed out
//! by the library must be released with [`pl_string_free`], handles with
//! their own `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use policylens::annotators::anonymize;
use policylens::codebook::{normalize_record, AnnotationRecord};
use policylens::cohort::{default_dictionaries, MentionMatcher};
use policylens::corpus::{self, Language};
use policylens::evalmetrics::{krippendorff_alpha, ReliabilityMatrix};
use policylens::generators::{GeneratorDictionary, DEFAULT_GENERATORS_JSON};
use policylens::stats::{self, ProportionSample};
use serde_json::json;
use thiserror::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlLanguage {
    De = 0,
    En = 1,
    Fr = 2,
    It = 3,
    Unknown = 4,
}

impl From<Language> for PlLanguage {
    fn from(l: Language) -> Self {
        match l {
            Language::De => PlLanguage::De,
            Language::En => PlLanguage::En,
            Language::Fr => PlLanguage::Fr,
            Language::It => PlLanguage::It,
            Language::Unknown => PlLanguage::Unknown,
        }
    }
}

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer for `{0}`")]
    Null(&'static str),
    #[error("`{0}` is not valid UTF-8")]
    Utf8(&'static str),
    #[error("{0}")]
    Argument(String),
    #[error("{0}")]
    Parse(String),
}

impl FfiError {
    fn status(&self) -> PlStatus {
        match self {
            FfiError::Null(_) => PlStatus::NullPointer,
            FfiError::Utf8(_) => PlStatus::InvalidUtf8,
            FfiError::Argument(_) => PlStatus::InvalidArgument,
            FfiError::Parse(_) => PlStatus::Parse,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> PlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            e.status()
        }
        Err(_) => {
            set_error("internal panic".into());
            PlStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(name))
}

unsafe fn put_string(p: *mut *mut c_char, s: String) -> Result<(), FfiError> {
    let slot = out(p, "out")?;
    let c = CString::new(s).map_err(|_| FfiError::Argument("result contains a nul byte".into()))?;
    *slot = c.into_raw();
    Ok(())
}

fn probability(p: f64, name: &str) -> Result<f64, FfiError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(FfiError::Argument(format!("{name} = {p} is outside [0, 1]")))
    }
}

/// Message of the last failed call on this thread, or NULL. Owned by the
/// library and valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `text` is a NUL-terminated string; the out pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn pl_detect_language(
    text: *const c_char,
    language: *mut PlLanguage,
    confidence: *mut f64,
) -> PlStatus {
    guard(|| {
        let (lang, conf) = corpus::detect_language(self::text(text, "text")?);
        *out(language, "language")? = lang.into();
        *out(confidence, "confidence")? = conf;
        Ok(())
    })
}

/// # Safety
/// `text` is a NUL-terminated string; `count` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_word_count(text: *const c_char, count: *mut u64) -> PlStatus {
    guard(|| {
        *out(count, "count")? = corpus::word_count(self::text(text, "text")?);
        Ok(())
    })
}

/// Pooled two-proportion z-test. `z` is NaN when the pooled proportion is
/// 0 or 1, in which case `p_value` is 1.
///
/// # Safety
/// The out pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn pl_two_prop_z(
    successes1: u64,
    n1: u64,
    successes2: u64,
    n2: u64,
    z: *mut f64,
    p_value: *mut f64,
) -> PlStatus {
    guard(|| {
        let a = ProportionSample::new(successes1, n1).map_err(|e| FfiError::Argument(e.to_string()))?;
        let b = ProportionSample::new(successes2, n2).map_err(|e| FfiError::Argument(e.to_string()))?;
        let t = stats::two_prop_z(a, b);
        *out(z, "z")? = t.z.unwrap_or(f64::NAN);
        *out(p_value, "p_value")? = t.p_value;
        Ok(())
    })
}

/// Benjamini-Hochberg over `len` p-values. `reject` and `q_values` receive
/// `len` entries in input order; any of the arrays may be NULL when `len`
/// is 0.
///
/// # Safety
/// Each non-NULL array holds at least `len` elements.
#[no_mangle]
pub unsafe extern "C" fn pl_bh_fdr(
    p_values: *const f64,
    len: usize,
    alpha: f64,
    reject: *mut bool,
    q_values: *mut f64,
) -> PlStatus {
    guard(|| {
        probability(alpha, "alpha")?;
        if len == 0 {
            return Ok(());
        }
        if p_values.is_null() {
            return Err(FfiError::Null("p_values"));
        }
        if reject.is_null() {
            return Err(FfiError::Null("reject"));
        }
        if q_values.is_null() {
            return Err(FfiError::Null("q_values"));
        }
        let p = std::slice::from_raw_parts(p_values, len);
        let (r, q) = stats::bh_fdr(p, alpha).map_err(|e| FfiError::Argument(e.to_string()))?;
        std::slice::from_raw_parts_mut(reject, len).copy_from_slice(&r);
        std::slice::from_raw_parts_mut(q_values, len).copy_from_slice(&q);
        Ok(())
    })
}

/// # Safety
/// `h` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_cohens_h(p1: f64, p2: f64, h: *mut f64) -> PlStatus {
    guard(|| {
        let v = stats::cohens_h(probability(p1, "p1")?, probability(p2, "p2")?);
        *out(h, "h")? = v;
        Ok(())
    })
}

/// Minimum detectable effect as Cohen's h and as a shift from `baseline`.
///
/// # Safety
/// The out pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn pl_mde(
    n1: u64,
    n2: u64,
    alpha: f64,
    power: f64,
    baseline: f64,
    mde_h: *mut f64,
    mde_pp: *mut f64,
) -> PlStatus {
    guard(|| {
        let m = stats::mde(n1, n2, alpha, power, baseline).map_err(|e| FfiError::Argument(e.to_string()))?;
        *out(mde_h, "mde_h")? = m.mde_h;
        *out(mde_pp, "mde_pp")? = m.mde_pp;
        Ok(())
    })
}

/// Units-by-coders table of categorical values.
pub struct PlReliability(ReliabilityMatrix);

unsafe fn strings(p: *const *const c_char, len: usize, name: &'static str) -> Result<Vec<String>, FfiError> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    std::slice::from_raw_parts(p, len).iter().map(|s| text(*s, name).map(str::to_string)).collect()
}

/// Creates an empty matrix; at least two coders are required.
///
/// # Safety
/// `units` and `coders` point to arrays of NUL-terminated strings of the
/// given lengths; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_reliability_new(
    units: *const *const c_char,
    n_units: usize,
    coders: *const *const c_char,
    n_coders: usize,
    handle: *mut *mut PlReliability,
) -> PlStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let m = ReliabilityMatrix::new(strings(units, n_units, "units")?, strings(coders, n_coders, "coders")?)
            .map_err(|e| FfiError::Argument(e.to_string()))?;
        *slot = Box::into_raw(Box::new(PlReliability(m)));
        Ok(())
    })
}

/// Records the value `coder` gave `unit`, replacing any earlier value.
///
/// # Safety
/// `handle` comes from [`pl_reliability_new`]; the strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pl_reliability_set(
    handle: *mut PlReliability,
    unit: *const c_char,
    coder: *const c_char,
    value: *const c_char,
) -> PlStatus {
    guard(|| {
        let m = &mut out(handle, "handle")?.0;
        m.set(text(unit, "unit")?, text(coder, "coder")?, text(value, "value")?)
            .map_err(|e| FfiError::Argument(e.to_string()))
    })
}

/// Nominal Krippendorff's alpha of the current matrix.
///
/// # Safety
/// `handle` comes from [`pl_reliability_new`]; `alpha` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_reliability_alpha(handle: *const PlReliability, alpha: *mut f64) -> PlStatus {
    guard(|| {
        let m = &handle.as_ref().ok_or(FfiError::Null("handle"))?.0;
        let a = krippendorff_alpha(m).map_err(|e| FfiError::Argument(e.to_string()))?;
        *out(alpha, "alpha")? = a;
        Ok(())
    })
}

/// # Safety
/// `handle` comes from [`pl_reliability_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_reliability_free(handle: *mut PlReliability) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Compiled generator dictionary.
pub struct PlGenerators(GeneratorDictionary);

/// Compiles a generator dictionary from JSON; NULL selects the bundled one.
///
/// # Safety
/// `json` is NULL or NUL-terminated; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_generators_new(json: *const c_char, handle: *mut *mut PlGenerators) -> PlStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let source = if json.is_null() { DEFAULT_GENERATORS_JSON } else { text(json, "json")? };
        let d = GeneratorDictionary::from_json(source).map_err(|e| FfiError::Parse(e.to_string()))?;
        *slot = Box::into_raw(Box::new(PlGenerators(d)));
        Ok(())
    })
}

/// Generator ids found in `text`, as a sorted JSON array of strings.
///
/// # Safety
/// `handle` comes from [`pl_generators_new`]; `text` is NUL-terminated;
/// `json_out` is writable and receives a string for [`pl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pl_generators_detect(
    handle: *const PlGenerators,
    text: *const c_char,
    json_out: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let d = &handle.as_ref().ok_or(FfiError::Null("handle"))?.0;
        let found: Vec<String> = d.detect(self::text(text, "text")?).into_iter().collect();
        put_string(json_out, json!(found).to_string())
    })
}

/// # Safety
/// `handle` comes from [`pl_generators_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_generators_free(handle: *mut PlGenerators) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Law mentions in `text` under the bundled term dictionaries, as JSON with
/// `doc_id`, `mentions` and `matched_terms`.
///
/// # Safety
/// `doc_id` and `text` are NUL-terminated; `json_out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_mentions_json(
    doc_id: *const c_char,
    text: *const c_char,
    json_out: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let matcher = MentionMatcher::new(&default_dictionaries()).map_err(|e| FfiError::Parse(e.to_string()))?;
        let report = matcher.detect(self::text(doc_id, "doc_id")?, self::text(text, "text")?);
        put_string(json_out, serde_json::to_string(&report).map_err(|e| FfiError::Parse(e.to_string()))?)
    })
}

/// `text` with e-mail addresses, URLs, IBANs and phone numbers replaced by
/// placeholders.
///
/// # Safety
/// `text` is NUL-terminated; `text_out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_anonymize(text: *const c_char, text_out: *mut *mut c_char) -> PlStatus {
    guard(|| put_string(text_out, anonymize(self::text(text, "text")?).text))
}

/// Applies the screening cascade to one annotation record given as JSON.
/// The result is `{"record": ..., "warnings": [...]}`.
///
/// # Safety
/// `json` is NUL-terminated; `json_out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_normalize_record_json(json: *const c_char, json_out: *mut *mut c_char) -> PlStatus {
    guard(|| {
        let record: AnnotationRecord =
            serde_json::from_str(text(json, "json")?).map_err(|e| FfiError::Parse(e.to_string()))?;
        let (record, warnings) = normalize_record(&record);
        put_string(json_out, json!({ "record": record, "warnings": warnings }).to_string())
    })
}
