//! Annotation backends: a remote structured-output model client, a keyword
//! baseline and human ground-truth import.

pub mod anonymize;
pub mod baseline;
pub mod cache;
pub mod http;
pub mod human;
pub mod prompt;
pub mod remote;

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

pub use anonymize::{anonymize, AnonymizedText, Anonymizer, PatternAnonymizer, PatternClass};
pub use baseline::{annotate_baseline, BASELINE_ID};
pub use human::{apply_patches, import_human, HumanImport};
pub use prompt::{build_prompt, PromptBundle};
pub use remote::{RemoteAnnotator, RemoteConfig};

use crate::codebook::AnnotationRecord;
use crate::corpus::PolicyDocument;

#[derive(Debug, Error)]
pub enum AnnotatorError {
    #[error("policy `{0}` is empty after anonymization")]
    EmptyPolicy(String),
    #[error("policy `{0}` is not in a supported language")]
    UnsupportedLanguage(String),
    #[error("schema violation for `{doc_id}`: {violations:?}")]
    SchemaViolation { doc_id: String, violations: Vec<String>, raw: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request for `{0}` timed out")]
    Timeout(String),
    #[error("annotation of `{doc_id}` failed: {reason}")]
    AnnotationFailed { doc_id: String, reason: String },
    #[error("duplicate annotation for doc `{doc_id}` by coder `{coder_id}`")]
    DuplicateAnnotation { doc_id: String, coder_id: String },
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AnnotatorError {
    /// Network-side failures, as opposed to data problems.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            AnnotatorError::Transport(_) | AnnotatorError::Timeout(_) | AnnotatorError::SchemaViolation { .. }
        )
    }
}

/// Anything that turns a policy into an annotation record.
pub trait Annotator: Sync {
    fn annotate(&self, policy: &PolicyDocument) -> Result<AnnotationRecord, AnnotatorError>;
}

pub struct BaselineAnnotator;

impl Annotator for BaselineAnnotator {
    fn annotate(&self, policy: &PolicyDocument) -> Result<AnnotationRecord, AnnotatorError> {
        Ok(annotate_baseline(policy))
    }
}

impl Annotator for RemoteAnnotator {
    fn annotate(&self, policy: &PolicyDocument) -> Result<AnnotationRecord, AnnotatorError> {
        RemoteAnnotator::annotate(self, policy)
    }
}

/// Per-document outcome of a batch run.
pub type BatchResult = (String, Result<AnnotationRecord, AnnotatorError>);

/// Annotates `policies` with at most `width` requests in flight. Results are
/// returned sorted by `doc_id` regardless of completion order.
pub fn annotate_batch(annotator: &dyn Annotator, policies: &[PolicyDocument], width: usize) -> Vec<BatchResult> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(width.max(1)).build().expect("thread pool");
    let mut results: Vec<BatchResult> =
        pool.install(|| policies.par_iter().map(|p| (p.doc_id.clone(), annotator.annotate(p))).collect());
    results.sort_by(|a, b| a.0.cmp(&b.0));
    results
}

/// Writes records as JSON lines.
pub fn write_records<W: Write>(records: &[AnnotationRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads JSON-lines records.
pub fn read_records(text: &str) -> Result<Vec<AnnotationRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
