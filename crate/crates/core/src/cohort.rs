//! Study-group assignment, law-mention detection and summary tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::AnnotationRecord;
use crate::corpus::{median, Language, PolicyDocument, WebsiteRecord, WindowLabel};
use crate::stats::table::{format_fixed, format_signed};

pub const DEFAULT_TERMS_JSON: &str = include_str!("../data/terms.json");

pub const EU_COUNTRIES: [&str; 27] = [
    "AT", "BE", "BG", "CY", "CZ", "DE", "DK", "EE", "ES", "FI", "FR", "GR", "HR", "HU", "IE", "IT", "LT", "LU", "LV",
    "MT", "NL", "PL", "PT", "RO", "SE", "SI", "SK",
];

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("invalid term dictionary: {0}")]
    Dictionary(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Regex(#[from] regex::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "EU")]
    Eu,
    #[serde(rename = "CH")]
    Ch,
    #[serde(rename = "CH_EU")]
    ChEu,
    #[serde(rename = "EXCLUDED")]
    Excluded,
}

impl Group {
    /// The three study groups in report order.
    pub const STUDY: [Group; 3] = [Group::Eu, Group::Ch, Group::ChEu];

    pub fn code(self) -> &'static str {
        match self {
            Group::Eu => "EU",
            Group::Ch => "CH",
            Group::ChEu => "CH_EU",
            Group::Excluded => "EXCLUDED",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Group::ChEu => "CH & EU",
            other => other.code(),
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    SwissTldNoEuBucket,
    SwissTldEuBucket,
    EuTldNoChBucket,
    GenericTld,
    Other,
}

impl Rationale {
    pub fn code(self) -> &'static str {
        match self {
            Rationale::SwissTldNoEuBucket => "swiss_tld_no_eu_bucket",
            Rationale::SwissTldEuBucket => "swiss_tld_eu_bucket",
            Rationale::EuTldNoChBucket => "eu_tld_no_ch_bucket",
            Rationale::GenericTld => "generic_tld",
            Rationale::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupLabel {
    pub value: Group,
    pub rationale: Rationale,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRules {
    pub swiss_tlds: BTreeSet<String>,
    pub eu_tlds: BTreeSet<String>,
    pub eu_countries: BTreeSet<String>,
}

impl Default for GroupRules {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            swiss_tlds: set(&["ch", "swiss"]),
            eu_tlds: set(&["de", "at", "fr", "it"]),
            eu_countries: set(&EU_COUNTRIES),
        }
    }
}

pub fn assign_group(website: &WebsiteRecord, rules: &GroupRules) -> GroupLabel {
    let tld = website.tld.to_ascii_lowercase();
    let has_eu_bucket = website.rank_buckets.keys().any(|c| rules.eu_countries.contains(&c.to_ascii_uppercase()));
    let has_ch_bucket = website.rank_buckets.keys().any(|c| c.eq_ignore_ascii_case("CH"));
    let label = |value, rationale| GroupLabel { value, rationale };
    if rules.swiss_tlds.contains(&tld) {
        if has_eu_bucket {
            label(Group::ChEu, Rationale::SwissTldEuBucket)
        } else {
            label(Group::Ch, Rationale::SwissTldNoEuBucket)
        }
    } else if rules.eu_tlds.contains(&tld) && !has_ch_bucket {
        label(Group::Eu, Rationale::EuTldNoChBucket)
    } else if tld.chars().count() > 2 {
        label(Group::Excluded, Rationale::GenericTld)
    } else {
        label(Group::Excluded, Rationale::Other)
    }
}

/// `domain,label,rationale` for each distinct domain, sorted.
pub fn groups_csv(websites: &[&WebsiteRecord], rules: &GroupRules) -> String {
    let mut rows: BTreeMap<&str, GroupLabel> = BTreeMap::new();
    for w in websites {
        rows.entry(&w.domain).or_insert_with(|| assign_group(w, rules));
    }
    let mut out = String::from("domain,label,rationale\n");
    for (domain, g) in rows {
        let _ = writeln!(out, "{domain},{},{}", g.value.code(), g.rationale.code());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Law {
    #[serde(rename = "GDPR")]
    Gdpr,
    #[serde(rename = "FADP")]
    Fadp,
}

impl Law {
    pub fn code(self) -> &'static str {
        match self {
            Law::Gdpr => "GDPR",
            Law::Fadp => "FADP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDictionary {
    pub law: Law,
    pub terms: Vec<String>,
}

pub fn load_dictionaries(json: &str) -> Result<Vec<TermDictionary>, CohortError> {
    let dicts: Vec<TermDictionary> = serde_json::from_str(json)?;
    if dicts.is_empty() {
        return Err(CohortError::Dictionary("no dictionaries".into()));
    }
    for d in &dicts {
        if d.terms.is_empty() || d.terms.iter().any(|t| t.trim().is_empty()) {
            return Err(CohortError::Dictionary(format!("{} has empty terms", d.law.code())));
        }
    }
    Ok(dicts)
}

pub fn default_dictionaries() -> Vec<TermDictionary> {
    load_dictionaries(DEFAULT_TERMS_JSON).expect("bundled terms are valid")
}

/// Short single-token terms (acronyms, statute numbers) match case-sensitively.
pub fn is_case_sensitive(term: &str) -> bool {
    !term.contains(char::is_whitespace) && (term.chars().count() <= 6 || term.chars().any(|c| c.is_ascii_digit()))
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    law: Law,
    term: String,
    pattern: Regex,
}

/// Dictionaries compiled for repeated matching.
#[derive(Debug, Clone)]
pub struct MentionMatcher {
    terms: Vec<CompiledTerm>,
}

impl MentionMatcher {
    pub fn new(dictionaries: &[TermDictionary]) -> Result<Self, CohortError> {
        let mut terms = Vec::new();
        for d in dictionaries {
            for t in &d.terms {
                let body = t.split_whitespace().map(regex::escape).collect::<Vec<_>>().join(r"\s+");
                let flags = if is_case_sensitive(t) { "" } else { "(?i)" };
                terms.push(CompiledTerm {
                    law: d.law,
                    term: t.clone(),
                    pattern: Regex::new(&format!("{flags}{body}"))?,
                });
            }
        }
        Ok(Self { terms })
    }

    pub fn detect(&self, doc_id: &str, text: &str) -> MentionReport {
        let mut matched_terms = Vec::new();
        for t in &self.terms {
            let mut start = 0;
            while let Some(m) = t.pattern.find_at(text, start) {
                if has_boundaries(text, m.start(), m.end()) {
                    matched_terms.push(MatchedTerm { law: t.law, term: t.term.clone(), offset: m.start() });
                    start = m.end();
                } else {
                    start = m.start() + text[m.start()..].chars().next().map_or(1, char::len_utf8);
                }
                if start >= text.len() {
                    break;
                }
            }
        }
        matched_terms.sort_by(|a, b| (a.offset, a.law, &a.term).cmp(&(b.offset, b.law, &b.term)));
        let mentions = matched_terms.iter().map(|m| m.law).collect();
        MentionReport { doc_id: doc_id.to_string(), mentions, matched_terms }
    }
}

impl Default for MentionMatcher {
    fn default() -> Self {
        Self::new(&default_dictionaries()).expect("bundled terms compile")
    }
}

fn has_boundaries(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedTerm {
    pub law: Law,
    pub term: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionReport {
    pub doc_id: String,
    pub mentions: BTreeSet<Law>,
    pub matched_terms: Vec<MatchedTerm>,
}

pub fn detect_mentions(
    doc_id: &str,
    text: &str,
    dictionaries: &[TermDictionary],
) -> Result<MentionReport, CohortError> {
    Ok(MentionMatcher::new(dictionaries)?.detect(doc_id, text))
}

/// A corpus document joined with its annotation and group.
#[derive(Debug, Clone, Copy)]
pub struct StudyDoc<'a> {
    pub doc: &'a PolicyDocument,
    pub record: &'a AnnotationRecord,
    pub group: Group,
    /// For October docs: whether the stated update date falls after the
    /// domain's August capture. `None` without an August capture.
    pub october_update: Option<bool>,
}

impl StudyDoc<'_> {
    pub fn is_policy(&self) -> bool {
        self.record.ispol
    }

    pub fn window(&self) -> WindowLabel {
        self.doc.snapshot.window_label
    }
}

/// Joins documents to records on doc_id. Returns the joined docs and the
/// ids of documents without a record.
pub fn study_docs<'a>(
    docs: &'a [PolicyDocument],
    records: &'a [AnnotationRecord],
    rules: &GroupRules,
) -> (Vec<StudyDoc<'a>>, Vec<String>) {
    let by_id: HashMap<&str, &AnnotationRecord> = records.iter().map(|r| (r.doc_id.as_str(), r)).collect();
    let august: HashMap<&str, chrono::NaiveDate> = docs
        .iter()
        .filter(|d| d.snapshot.window_label == WindowLabel::Aug2023)
        .map(|d| (d.website.domain.as_str(), d.snapshot.capture_date))
        .collect();
    let mut out = Vec::new();
    let mut missing = Vec::new();
    for doc in docs {
        let Some(record) = by_id.get(doc.doc_id.as_str()) else {
            missing.push(doc.doc_id.clone());
            continue;
        };
        let october_update = (doc.snapshot.window_label == WindowLabel::Oct2023)
            .then(|| august.get(doc.website.domain.as_str()))
            .flatten()
            .map(|aug| record.upd.is_some_and(|u| u > *aug));
        out.push(StudyDoc { doc, record, group: assign_group(&doc.website, rules).value, october_update });
    }
    (out, missing)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: Group,
    pub window: WindowLabel,
    pub websites: u64,
    pub policies: u64,
    pub languages: BTreeMap<Language, u64>,
    /// Set when the group has no websites at all.
    pub empty: bool,
}

impl SummaryRow {
    pub fn pct_policy(&self) -> String {
        format_fixed(i128::from(self.policies) * 100, i128::from(self.websites.max(1)), 2)
    }

    pub fn pct_language(&self, lang: Language) -> String {
        let n = self.languages.get(&lang).copied().unwrap_or(0);
        format_fixed(i128::from(n) * 100, i128::from(self.policies.max(1)), 2)
    }
}

pub fn summary_stats(docs: &[StudyDoc<'_>], group: Group, window: WindowLabel) -> SummaryRow {
    let websites: BTreeSet<&str> =
        docs.iter().filter(|d| d.group == group).map(|d| d.doc.website.domain.as_str()).collect();
    let mut languages = BTreeMap::new();
    let mut policy_sites = BTreeSet::new();
    for d in docs.iter().filter(|d| d.group == group && d.window() == window && d.is_policy()) {
        if policy_sites.insert(d.doc.website.domain.as_str()) {
            *languages.entry(d.doc.language).or_insert(0) += 1;
        }
    }
    SummaryRow {
        group,
        window,
        websites: websites.len() as u64,
        policies: policy_sites.len() as u64,
        languages,
        empty: websites.is_empty(),
    }
}

const WINDOWS: [WindowLabel; 2] = [WindowLabel::Aug2023, WindowLabel::Oct2023];

fn short(window: WindowLabel) -> &'static str {
    match window {
        WindowLabel::Aug2023 => "Aug",
        WindowLabel::Oct2023 => "Oct",
        WindowLabel::Other => "Other",
    }
}

/// Websites, policy share and language shares per group and window.
pub fn summary_table(docs: &[StudyDoc<'_>]) -> String {
    let rows: Vec<SummaryRow> = Group::STUDY
        .iter()
        .flat_map(|g| WINDOWS.iter().map(move |w| (*g, *w)))
        .map(|(g, w)| summary_stats(docs, g, w))
        .collect();
    let mut out = String::from("|  |");
    for r in &rows {
        let _ = write!(out, " {} {} |", r.group.title(), short(r.window));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(rows.len()));
    out.push('\n');
    let mut line = |label: &str, f: &dyn Fn(&SummaryRow) -> String| {
        let _ = write!(out, "| {label} |");
        for r in &rows {
            let _ = write!(out, " {} |", f(r));
        }
        out.push('\n');
    };
    line("Websites", &|r| r.websites.to_string());
    line("% With policy", &|r| r.pct_policy());
    for (lang, name) in
        [(Language::De, "German"), (Language::En, "English"), (Language::Fr, "French"), (Language::It, "Italian")]
    {
        line(&format!("% {name}"), &|r| r.pct_language(lang));
    }
    out
}

fn format_median(m: f64) -> String {
    if m.fract() == 0.0 {
        format!("{m:.0}")
    } else {
        format!("{m:.1}")
    }
}

/// Median word counts of policies per group in each window.
pub fn word_count_table(docs: &[StudyDoc<'_>]) -> String {
    let mut out = String::from("|  |");
    for g in Group::STUDY {
        let _ = write!(out, " {} |", g.title());
    }
    out.push_str("\n|---|---:|---:|---:|\n");
    let medians: Vec<[Option<f64>; 2]> = Group::STUDY
        .iter()
        .map(|g| {
            WINDOWS.map(|w| {
                let counts: Vec<u64> = docs
                    .iter()
                    .filter(|d| d.group == *g && d.window() == w && d.is_policy())
                    .map(|d| d.doc.word_count)
                    .collect();
                median(&counts).ok()
            })
        })
        .collect();
    let na = || "NA".to_string();
    for (i, label) in ["# Words August", "# Words October"].iter().enumerate() {
        let _ = write!(out, "| {label} |");
        for m in &medians {
            let _ = write!(out, " {} |", m[i].map_or_else(na, format_median));
        }
        out.push('\n');
    }
    out.push_str("| Δ # words |");
    for m in &medians {
        let cell = match m {
            [Some(a), Some(b)] => {
                let d = b - a;
                let sign = if d >= 0.0 { "+" } else { "-" };
                format!("{sign}{}", format_median(d.abs()))
            }
            _ => na(),
        };
        let _ = write!(out, " {cell} |");
    }
    out.push_str("\n| Δ percentage |");
    for m in &medians {
        let cell = match m {
            // medians are multiples of 0.5, so doubling keeps them integral
            [Some(a), Some(b)] if *a > 0.0 => {
                let (a2, b2) = ((a * 2.0) as i128, (b * 2.0) as i128);
                format!("{}%", format_signed((b2 - a2) * 100, a2, 1))
            }
            _ => na(),
        };
        let _ = write!(out, " {cell} |");
    }
    out.push('\n');
    out
}

/// Share of policies mentioning each law per group and window.
pub fn mentions_table(docs: &[StudyDoc<'_>], matcher: &MentionMatcher) -> String {
    let mut counts: BTreeMap<(Group, WindowLabel), (u64, u64, u64)> = BTreeMap::new();
    for d in docs.iter().filter(|d| d.is_policy()) {
        let report = matcher.detect(&d.doc.doc_id, &d.doc.text);
        let e = counts.entry((d.group, d.window())).or_default();
        e.0 += 1;
        e.1 += u64::from(report.mentions.contains(&Law::Gdpr));
        e.2 += u64::from(report.mentions.contains(&Law::Fadp));
    }
    let get = |g, w| counts.get(&(g, w)).copied().unwrap_or_default();
    let mut out = String::from("|  |");
    for g in Group::STUDY {
        let _ = write!(out, " {} |", g.title());
    }
    out.push_str("\n|---|---:|---:|---:|\n");
    let pct =
        |k: u64, n: u64| if n == 0 { "NA".to_string() } else { format_fixed(i128::from(k) * 100, i128::from(n), 2) };
    for (law, idx) in [(Law::Gdpr, 1), (Law::Fadp, 2)] {
        for w in WINDOWS {
            let month = if w == WindowLabel::Aug2023 { "August" } else { "October" };
            let _ = write!(out, "| % {} {month} |", law.code());
            for g in Group::STUDY {
                let c = get(g, w);
                let k = if idx == 1 { c.1 } else { c.2 };
                let _ = write!(out, " {} |", pct(k, c.0));
            }
            out.push('\n');
        }
    }
    for (law, idx) in [(Law::Gdpr, 1), (Law::Fadp, 2)] {
        let _ = write!(out, "| Difference {} (Δ p.p.) |", law.code());
        for g in Group::STUDY {
            let (a, b) = (get(g, WindowLabel::Aug2023), get(g, WindowLabel::Oct2023));
            let (ka, kb) = if idx == 1 { (a.1, b.1) } else { (a.2, b.2) };
            let cell = if a.0 == 0 || b.0 == 0 {
                "NA".to_string()
            } else {
                let num = (i128::from(kb) * i128::from(a.0) - i128::from(ka) * i128::from(b.0)) * 100;
                format_signed(num, i128::from(a.0) * i128::from(b.0), 2)
            };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out
}
