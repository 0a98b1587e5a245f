//! Policy corpus ingestion: JSON-lines snapshots with website metadata,
//! deduplication, language identification and word counts.

mod langid;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use langid::{detect_language, LanguageIdentifier, TrigramIdentifier, DEFAULT_MIN_CHARS, DEFAULT_MIN_CONFIDENCE};

/// Fraction of malformed lines above which ingestion aborts.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{malformed} of {lines} lines malformed (limit 10%)")]
    TooManyMalformed { malformed: usize, lines: usize },
    #[error("unsupported corpus format `{0}`")]
    UnsupportedFormat(String),
    #[error("empty selection")]
    EmptySelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    De,
    En,
    Fr,
    It,
    Unknown,
}

impl Language {
    pub const TARGETS: [Language; 4] = [Language::De, Language::En, Language::Fr, Language::It];

    pub fn code(self) -> &'static str {
        match self {
            Language::De => "de",
            Language::En => "en",
            Language::Fr => "fr",
            Language::It => "it",
            Language::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "de" => Ok(Language::De),
            "en" => Ok(Language::En),
            "fr" => Ok(Language::Fr),
            "it" => Ok(Language::It),
            "unknown" => Ok(Language::Unknown),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

/// Country-specific popularity tier, most popular first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankBucket {
    #[serde(rename = "1k")]
    Top1k,
    #[serde(rename = "5k")]
    Top5k,
    #[serde(rename = "10k")]
    Top10k,
    #[serde(rename = "50k")]
    Top50k,
    #[serde(rename = "100k")]
    Top100k,
    #[serde(rename = "500k")]
    Top500k,
    #[serde(rename = "1M")]
    Top1M,
    #[serde(rename = "5M")]
    Top5M,
    #[serde(rename = "10M+")]
    Top10MPlus,
}

impl RankBucket {
    pub const ALL: [RankBucket; 9] = [
        RankBucket::Top1k,
        RankBucket::Top5k,
        RankBucket::Top10k,
        RankBucket::Top50k,
        RankBucket::Top100k,
        RankBucket::Top500k,
        RankBucket::Top1M,
        RankBucket::Top5M,
        RankBucket::Top10MPlus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RankBucket::Top1k => "1k",
            RankBucket::Top5k => "5k",
            RankBucket::Top10k => "10k",
            RankBucket::Top50k => "50k",
            RankBucket::Top100k => "100k",
            RankBucket::Top500k => "500k",
            RankBucket::Top1M => "1M",
            RankBucket::Top5M => "5M",
            RankBucket::Top10MPlus => "10M+",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebsiteRecord {
    pub domain: String,
    pub tld: String,
    /// ISO 3166-1 alpha-2 country code (upper case) to bucket.
    pub rank_buckets: BTreeMap<String, RankBucket>,
}

impl WebsiteRecord {
    /// Most popular bucket across all countries.
    pub fn best_bucket(&self) -> Option<RankBucket> {
        self.rank_buckets.values().min().copied()
    }

    /// Member of any country's top-5k bucket.
    pub fn is_top_5k(&self) -> bool {
        self.best_bucket().is_some_and(|b| b <= RankBucket::Top5k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WindowLabel {
    #[serde(rename = "AUG2023")]
    Aug2023,
    #[serde(rename = "OCT2023")]
    Oct2023,
    #[serde(rename = "OTHER")]
    Other,
}

impl WindowLabel {
    pub fn label(self) -> &'static str {
        match self {
            WindowLabel::Aug2023 => "AUG2023",
            WindowLabel::Oct2023 => "OCT2023",
            WindowLabel::Other => "OTHER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub snapshot_id: String,
    pub window_label: WindowLabel,
    pub capture_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub doc_id: String,
    pub website: WebsiteRecord,
    pub snapshot: PolicySnapshot,
    pub text: String,
    pub language: Language,
    pub language_confidence: f64,
    pub word_count: u64,
}

/// Count of maximal runs of non-whitespace characters.
pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Median with the even-length convention of averaging the middle pair.
pub fn median(values: &[u64]) -> Result<f64, CorpusError> {
    if values.is_empty() {
        return Err(CorpusError::EmptySelection);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 { sorted[mid] as f64 } else { (sorted[mid - 1] as f64 + sorted[mid] as f64) / 2.0 })
}

/// Median word count of the selected documents.
pub fn median_word_count<'a>(docs: impl IntoIterator<Item = &'a PolicyDocument>) -> Result<f64, CorpusError> {
    let counts: Vec<u64> = docs.into_iter().map(|d| d.word_count).collect();
    median(&counts)
}

/// One line of the interchange format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub doc_id: String,
    pub domain: String,
    pub tld: String,
    #[serde(default)]
    pub rank_buckets: BTreeMap<String, RankBucket>,
    pub snapshot_id: String,
    pub window_label: WindowLabel,
    pub capture_date: NaiveDate,
    pub text: String,
}

impl From<&PolicyDocument> for RawRecord {
    fn from(doc: &PolicyDocument) -> Self {
        RawRecord {
            doc_id: doc.doc_id.clone(),
            domain: doc.website.domain.clone(),
            tld: doc.website.tld.clone(),
            rank_buckets: doc.website.rank_buckets.clone(),
            snapshot_id: doc.snapshot.snapshot_id.clone(),
            window_label: doc.snapshot.window_label,
            capture_date: doc.snapshot.capture_date,
            text: doc.text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    JsonLines,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" | "json-lines" | "ndjson" => Ok(CorpusFormat::JsonLines),
            other => Err(CorpusError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Non-blank lines read.
    pub lines: usize,
    pub accepted: usize,
    pub duplicates: usize,
    pub errors: Vec<LineError>,
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub min_confidence: f64,
    pub min_chars: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { min_confidence: DEFAULT_MIN_CONFIDENCE, min_chars: DEFAULT_MIN_CHARS }
    }
}

/// Immutable, deduplicated set of policy documents in ingest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<PolicyDocument>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(docs: Vec<PolicyDocument>) -> Self {
        let index = docs.iter().enumerate().map(|(i, d)| (d.doc_id.clone(), i)).collect();
        Self { docs, index }
    }

    pub fn documents(&self) -> &[PolicyDocument] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&PolicyDocument> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Writes the corpus back out in the interchange format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.docs {
            serde_json::to_writer(&mut out, &RawRecord::from(doc))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn validate_record(raw: RawRecord) -> Result<RawRecord, String> {
    let mut raw = raw;
    raw.domain = raw.domain.trim().to_lowercase();
    raw.tld = raw.tld.trim().trim_start_matches('.').to_lowercase();
    if raw.doc_id.trim().is_empty() {
        return Err("empty doc_id".into());
    }
    if raw.domain.is_empty() {
        return Err("empty domain".into());
    }
    if raw.tld.is_empty() {
        return Err("empty tld".into());
    }
    if raw.snapshot_id.trim().is_empty() {
        return Err("empty snapshot_id".into());
    }
    let mut buckets = BTreeMap::new();
    for (country, bucket) in raw.rank_buckets {
        let cc = country.trim().to_ascii_uppercase();
        if cc.len() != 2 || !cc.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(format!("invalid country code `{country}`"));
        }
        buckets.insert(cc, bucket);
    }
    raw.rank_buckets = buckets;
    Ok(raw)
}

/// Reads JSON-lines records from `reader`.
///
/// Malformed lines are collected in the report; ingestion fails only when
/// more than 10% of the non-blank lines are malformed.
pub fn ingest_reader<R: Read>(
    reader: R,
    identifier: &dyn LanguageIdentifier,
) -> Result<(Corpus, IngestReport), CorpusError> {
    let mut report = IngestReport::default();
    let mut docs = Vec::new();
    let mut seen_keys: HashSet<(String, String)> = HashSet::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut snapshots: HashMap<String, (WindowLabel, NaiveDate)> = HashMap::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io { path: "<reader>".into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let parsed = serde_json::from_str::<RawRecord>(&line).map_err(|e| e.to_string()).and_then(validate_record);
        let raw = match parsed {
            Ok(raw) => raw,
            Err(message) => {
                report.errors.push(LineError { line: line_no, message });
                continue;
            }
        };
        if let Some(&(window, date)) = snapshots.get(&raw.snapshot_id) {
            if window != raw.window_label || date != raw.capture_date {
                report
                    .errors
                    .push(LineError { line: line_no, message: format!("snapshot `{}` redefined", raw.snapshot_id) });
                continue;
            }
        }
        let key = (raw.domain.clone(), raw.snapshot_id.clone());
        if seen_keys.contains(&key) {
            report.duplicates += 1;
            continue;
        }
        if seen_ids.contains(&raw.doc_id) {
            report.errors.push(LineError {
                line: line_no,
                message: format!("doc_id `{}` reused for another website/snapshot", raw.doc_id),
            });
            continue;
        }
        snapshots.insert(raw.snapshot_id.clone(), (raw.window_label, raw.capture_date));
        seen_keys.insert(key);
        seen_ids.insert(raw.doc_id.clone());

        let (language, language_confidence) = identifier.identify(&raw.text);
        docs.push(PolicyDocument {
            word_count: word_count(&raw.text),
            doc_id: raw.doc_id,
            website: WebsiteRecord { domain: raw.domain, tld: raw.tld, rank_buckets: raw.rank_buckets },
            snapshot: PolicySnapshot {
                snapshot_id: raw.snapshot_id,
                window_label: raw.window_label,
                capture_date: raw.capture_date,
            },
            text: raw.text,
            language,
            language_confidence,
        });
    }

    let malformed = report.errors.len();
    if report.lines > 0 && malformed as f64 > MAX_MALFORMED_FRACTION * report.lines as f64 {
        return Err(CorpusError::TooManyMalformed { malformed, lines: report.lines });
    }
    report.accepted = docs.len();
    Ok((Corpus::from_documents(docs), report))
}

/// Ingests a corpus file with the default language identifier.
pub fn ingest_corpus(
    path: &Path,
    format: CorpusFormat,
    options: IngestOptions,
) -> Result<(Corpus, IngestReport), CorpusError> {
    match format {
        CorpusFormat::JsonLines => {}
    }
    let file = fs::File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    let identifier = TrigramIdentifier::new(options.min_confidence, options.min_chars);
    ingest_reader(file, &identifier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(doc: &str, domain: &str, snap: &str, text: &str) -> String {
        serde_json::json!({
            "doc_id": doc, "domain": domain, "tld": "ch",
            "rank_buckets": {"CH": "10k"},
            "snapshot_id": snap, "window_label": "AUG2023",
            "capture_date": "2023-08-01", "text": text,
        })
        .to_string()
    }

    fn ingest(s: &str) -> Result<(Corpus, IngestReport), CorpusError> {
        ingest_reader(s.as_bytes(), &TrigramIdentifier::default())
    }

    #[test]
    fn dedup_on_domain_and_snapshot() {
        let input = [
            line("a", "a.ch", "s1", "eins zwei"),
            line("b", "b.ch", "s1", "drei"),
            line("a2", "a.ch", "s1", "eins zwei"),
        ]
        .join("\n");
        let (corpus, report) = ingest(&input).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(report.duplicates, 1);
        assert_eq!(report.accepted, 2);
    }

    #[test]
    fn empty_file() {
        let (corpus, report) = ingest("").unwrap();
        assert!(corpus.is_empty());
        assert!(report.errors.is_empty());
    }

    #[test]
    fn missing_text_rejects_only_that_line() {
        let mut lines: Vec<String> = (0..10).map(|i| line(&format!("d{i}"), &format!("s{i}.ch"), "s1", "x")).collect();
        lines.push(
            r#"{"doc_id":"bad","domain":"bad.ch","tld":"ch","snapshot_id":"s1","window_label":"AUG2023","capture_date":"2023-08-01"}"#
                .to_string(),
        );
        let (corpus, report) = ingest(&lines.join("\n")).unwrap();
        assert_eq!(corpus.len(), 10);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, 11);
        assert!(report.errors[0].message.contains("text"));
    }

    #[test]
    fn too_many_malformed_is_fatal() {
        let input = [line("a", "a.ch", "s1", "x"), "{not json".into()].join("\n");
        assert!(matches!(ingest(&input), Err(CorpusError::TooManyMalformed { malformed: 1, lines: 2 })));
    }

    #[test]
    fn bad_bucket_and_country_rejected() {
        let mut lines: Vec<String> = (0..10).map(|i| line(&format!("d{i}"), &format!("s{i}.ch"), "s1", "x")).collect();
        lines.push(line("e", "e.ch", "s1", "x").replace("\"10k\"", "\"7k\""));
        let (_, report) = ingest(&lines.join("\n")).unwrap();
        assert_eq!(report.errors.len(), 1);
    }

    #[test]
    fn normalizes_case() {
        let input = line("a", "WWW.Example.CH", "s1", "x").replace("\"tld\":\"ch\"", "\"tld\":\"CH\"");
        let (corpus, _) = ingest(&input).unwrap();
        let doc = &corpus.documents()[0];
        assert_eq!(doc.website.domain, "www.example.ch");
        assert_eq!(doc.website.tld, "ch");
    }

    #[test]
    fn ingest_is_idempotent() {
        let input = [line("a", "a.ch", "s1", "x y"), line("b", "b.ch", "s1", "z")].join("\n");
        assert_eq!(ingest(&input).unwrap(), ingest(&input).unwrap());
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count("a b  c"), 3);
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("Datenschutz-Grundverordnung gilt."), 2);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3, 5, 9]).unwrap(), 5.0);
        assert_eq!(median(&[2, 4]).unwrap(), 3.0);
        assert_eq!(median(&[7]).unwrap(), 7.0);
        assert!(matches!(median(&[]), Err(CorpusError::EmptySelection)));
    }

    #[test]
    fn top_5k() {
        let mut w = WebsiteRecord { domain: "a.ch".into(), tld: "ch".into(), rank_buckets: BTreeMap::new() };
        assert!(!w.is_top_5k());
        w.rank_buckets.insert("DE".into(), RankBucket::Top50k);
        w.rank_buckets.insert("CH".into(), RankBucket::Top5k);
        assert!(w.is_top_5k());
        assert_eq!(w.best_bucket(), Some(RankBucket::Top5k));
    }

    proptest! {
        #[test]
        fn trailing_whitespace_does_not_change_count(text in "\\PC{0,60}", ws in "[ \t\n\u{00a0}\u{2003}]{0,5}") {
            prop_assert_eq!(word_count(&text), word_count(&format!("{text}{ws}")));
        }

        #[test]
        fn median_bounded_and_permutation_invariant(mut v in proptest::collection::vec(0u64..100_000, 1..40)) {
            let m = median(&v).unwrap();
            let lo = *v.iter().min().unwrap() as f64;
            let hi = *v.iter().max().unwrap() as f64;
            prop_assert!(lo <= m && m <= hi);
            v.reverse();
            prop_assert_eq!(m, median(&v).unwrap());
        }

        #[test]
        fn detect_language_total(text in "\\PC{0,200}") {
            let (lang, conf) = detect_language(&text);
            prop_assert!((0.0..=1.0).contains(&conf));
            prop_assert_eq!((lang, conf), detect_language(&text));
        }
    }
}
