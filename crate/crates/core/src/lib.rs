//! Privacy-policy corpus analysis.
//!
//! The crate ingests scraped policy snapshots, annotates them against a
//! nine-question compliance codebook, validates annotations against human
//! ground truth, and computes cohort statistics, proportion tests,
//! contract-generator prevalence and embedding-based similarity reports.
//!
//! Every stage is exposed both as a library API and through the
//! `policylens` binary (see [`pipeline`]).

pub mod annotators;
pub mod codebook;
pub mod cohort;
pub mod corpus;
pub mod evalmetrics;
pub mod generators;
pub mod pipeline;
pub mod report;
pub mod simproj;
pub mod stats;
pub mod synth;

pub use codebook::{AnnotationRecord, Codebook, Dimension, Source};
pub use corpus::{Corpus, Language, PolicyDocument, WebsiteRecord, WindowLabel};
