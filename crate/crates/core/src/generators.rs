//! Generator detection: dictionary matching, candidate discovery and the
//! prevalence and compliance tables built on top of it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::{AnnotationRecord, Dimension};
use crate::cohort::{Group, StudyDoc};
use crate::corpus::{Language, RankBucket, WindowLabel};
use crate::stats::table::{format_fixed, format_signed};

pub const DEFAULT_GENERATORS_JSON: &str = include_str!("../data/generators.json");

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    Invalid(String),
    #[error("pattern {index} of `{id}` does not compile: {source}")]
    Pattern { id: String, index: usize, source: regex::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("boilerplate share needs at least one document")]
    NoDocuments,
    #[error("boilerplate phrase is empty")]
    EmptyPhrase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    pub display_name: String,
    pub country: String,
    pub patterns: Vec<String>,
}

impl GeneratorSpec {
    /// `Name (CC)`
    pub fn label(&self) -> String {
        format!("{} ({})", self.display_name, self.country)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GeneratorMatch<'a> {
    pub generator: &'a str,
    pub pattern: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMatchReport {
    pub doc_id: String,
    pub matches: BTreeSet<(String, usize, usize)>,
}

impl GeneratorMatchReport {
    pub fn generators(&self) -> BTreeSet<&str> {
        self.matches.iter().map(|(g, _, _)| g.as_str()).collect()
    }
}

/// A validated dictionary with compiled patterns.
#[derive(Debug, Clone)]
pub struct GeneratorDictionary {
    specs: Vec<GeneratorSpec>,
    compiled: Vec<Vec<Regex>>,
}

impl GeneratorDictionary {
    pub fn new(specs: Vec<GeneratorSpec>) -> Result<Self, GeneratorError> {
        let mut ids = BTreeSet::new();
        let mut compiled = Vec::with_capacity(specs.len());
        for s in &specs {
            if s.id.is_empty()
                || !s.id.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
            {
                return Err(GeneratorError::Invalid(format!("`{}` is not a slug", s.id)));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(GeneratorError::Invalid(format!("duplicate id `{}`", s.id)));
            }
            if s.patterns.is_empty() {
                return Err(GeneratorError::Invalid(format!("`{}` has no patterns", s.id)));
            }
            let regexes = s
                .patterns
                .iter()
                .enumerate()
                .map(|(index, p)| {
                    Regex::new(p).map_err(|source| GeneratorError::Pattern { id: s.id.clone(), index, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            compiled.push(regexes);
        }
        Ok(Self { specs, compiled })
    }

    pub fn from_json(json: &str) -> Result<Self, GeneratorError> {
        Self::new(serde_json::from_str(json)?)
    }

    pub fn specs(&self) -> &[GeneratorSpec] {
        &self.specs
    }

    pub fn spec(&self, id: &str) -> Option<&GeneratorSpec> {
        self.specs.iter().find(|s| s.id == id)
    }

    /// All matches of all patterns with byte offsets.
    pub fn scan(&self, doc_id: &str, text: &str) -> GeneratorMatchReport {
        let mut matches = BTreeSet::new();
        for (spec, regexes) in self.specs.iter().zip(&self.compiled) {
            for (i, re) in regexes.iter().enumerate() {
                for m in re.find_iter(text) {
                    matches.insert((spec.id.clone(), i, m.start()));
                }
            }
        }
        GeneratorMatchReport { doc_id: doc_id.to_string(), matches }
    }

    pub fn detect(&self, text: &str) -> BTreeSet<String> {
        self.specs
            .iter()
            .zip(&self.compiled)
            .filter(|(_, regexes)| regexes.iter().any(|r| r.is_match(text)))
            .map(|(s, _)| s.id.clone())
            .collect()
    }

    /// Checks that `offset` starts a match of the given pattern.
    pub fn verify(&self, text: &str, generator: &str, pattern: usize, offset: usize) -> bool {
        self.specs
            .iter()
            .position(|s| s.id == generator)
            .and_then(|i| self.compiled[i].get(pattern))
            .and_then(|re| re.find_at(text, offset))
            .is_some_and(|m| m.start() == offset)
    }
}

impl Default for GeneratorDictionary {
    fn default() -> Self {
        Self::from_json(DEFAULT_GENERATORS_JSON).expect("bundled generator dictionary is valid")
    }
}

pub fn detect_generators(text: &str, dictionary: &GeneratorDictionary) -> BTreeSet<String> {
    dictionary.detect(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolMentionCandidate {
    pub raw_string: String,
    pub frequency: u64,
    pub example_doc_ids: Vec<String>,
}

const MAX_EXAMPLES: usize = 5;

/// Groups the free-text `org` answers for manual review, most frequent first.
pub fn propose_generator_candidates(records: &[AnnotationRecord]) -> Vec<ToolMentionCandidate> {
    let mut groups: BTreeMap<String, ToolMentionCandidate> = BTreeMap::new();
    for r in records {
        let Some(org) = r.org.as_deref() else { continue };
        let key = org.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if key.is_empty() {
            continue;
        }
        let c = groups.entry(key.clone()).or_insert_with(|| ToolMentionCandidate {
            raw_string: key,
            frequency: 0,
            example_doc_ids: Vec::new(),
        });
        c.frequency += 1;
        if c.example_doc_ids.len() < MAX_EXAMPLES {
            c.example_doc_ids.push(r.doc_id.clone());
        }
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.raw_string.cmp(&b.raw_string)));
    out
}

/// A study document with the generators found in its text.
#[derive(Debug, Clone)]
pub struct GeneratorDoc<'a> {
    pub study: StudyDoc<'a>,
    pub generators: BTreeSet<String>,
}

pub fn tag_documents<'a>(docs: &[StudyDoc<'a>], dictionary: &GeneratorDictionary) -> Vec<GeneratorDoc<'a>> {
    use rayon::prelude::*;
    docs.par_iter().map(|d| GeneratorDoc { study: *d, generators: dictionary.detect(&d.doc.text) }).collect()
}

const WINDOWS: [WindowLabel; 2] = [WindowLabel::Aug2023, WindowLabel::Oct2023];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub generator: String,
    pub label: String,
    /// Indexed like `Group::STUDY` × (Aug, Oct).
    pub counts: Vec<u64>,
}

impl PrevalenceRow {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceTable {
    pub rows: Vec<PrevalenceRow>,
    pub with_generator: Vec<u64>,
    pub policies: Vec<u64>,
}

fn column(g: Group, w: WindowLabel) -> Option<usize> {
    let gi = Group::STUDY.iter().position(|x| *x == g)?;
    let wi = WINDOWS.iter().position(|x| *x == w)?;
    Some(gi * 2 + wi)
}

/// Policy counts per generator, group and window, sorted by total use.
pub fn prevalence(docs: &[GeneratorDoc<'_>], dictionary: &GeneratorDictionary) -> PrevalenceTable {
    let ncols = Group::STUDY.len() * WINDOWS.len();
    let mut rows: Vec<PrevalenceRow> = dictionary
        .specs()
        .iter()
        .map(|s| PrevalenceRow { generator: s.id.clone(), label: s.label(), counts: vec![0; ncols] })
        .collect();
    let mut with_generator = vec![0; ncols];
    let mut policies = vec![0; ncols];
    for d in docs.iter().filter(|d| d.study.is_policy()) {
        let Some(col) = column(d.study.group, d.study.window()) else { continue };
        policies[col] += 1;
        if !d.generators.is_empty() {
            with_generator[col] += 1;
        }
        for row in rows.iter_mut().filter(|r| d.generators.contains(&r.generator)) {
            row.counts[col] += 1;
        }
    }
    // stable sort keeps dictionary order on ties
    rows.sort_by_key(|r| std::cmp::Reverse(r.total()));
    PrevalenceTable { rows, with_generator, policies }
}

fn pct1(k: u64, n: u64) -> String {
    if n == 0 {
        "NA".to_string()
    } else {
        format_fixed(i128::from(k) * 100, i128::from(n), 1)
    }
}

impl PrevalenceTable {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Generator |");
        for g in Group::STUDY {
            let _ = write!(out, " {} Aug | {} Oct |", g.title(), g.title());
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.policies.len()));
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "| {} |", r.label);
            for c in &r.counts {
                let _ = write!(out, " {c} |");
            }
            out.push('\n');
        }
        out.push_str("| **With generator** |");
        for c in &self.with_generator {
            let _ = write!(out, " {c} |");
        }
        out.push_str("\n| **% of all policies** |");
        for (k, n) in self.with_generator.iter().zip(&self.policies) {
            let _ = write!(out, " {} |", pct1(*k, *n));
        }
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator");
        for g in Group::STUDY {
            for w in WINDOWS {
                let _ = write!(out, ",{}_{}", g.code(), w.label());
            }
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.generator);
            for c in &r.counts {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        for (name, vals) in [("with_generator", &self.with_generator), ("policies", &self.policies)] {
            out.push_str(name);
            for c in vals {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Coarse popularity tier: best bucket across countries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankTier {
    Top5k,
    Top10kTo50k,
    Beyond100k,
}

impl RankTier {
    pub const ALL: [RankTier; 3] = [RankTier::Top5k, RankTier::Top10kTo50k, RankTier::Beyond100k];

    pub fn of(best: Option<RankBucket>) -> Self {
        match best {
            Some(RankBucket::Top1k | RankBucket::Top5k) => RankTier::Top5k,
            Some(RankBucket::Top10k | RankBucket::Top50k) => RankTier::Top10kTo50k,
            _ => RankTier::Beyond100k,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RankTier::Top5k => "5k",
            RankTier::Top10kTo50k => "10-50k",
            RankTier::Beyond100k => "100k+",
        }
    }
}

/// October policies with any generator, by language and rank tier.
pub fn by_language_and_rank(docs: &[GeneratorDoc<'_>]) -> String {
    const LANGS: [Language; 4] = [Language::De, Language::En, Language::It, Language::Fr];
    let mut total: BTreeMap<String, u64> = BTreeMap::new();
    let mut with: BTreeMap<String, u64> = BTreeMap::new();
    for d in docs.iter().filter(|d| d.study.is_policy() && d.study.window() == WindowLabel::Oct2023) {
        if d.study.group == Group::Excluded {
            continue;
        }
        let keys = [
            format!("lang:{}", d.study.doc.language.code()),
            format!("rank:{}", RankTier::of(d.study.doc.website.best_bucket()).label()),
        ];
        for k in keys {
            *total.entry(k.clone()).or_default() += 1;
            if !d.generators.is_empty() {
                *with.entry(k).or_default() += 1;
            }
        }
    }
    let cols: Vec<(String, String)> = LANGS
        .iter()
        .map(|l| (format!("lang:{}", l.code()), l.code().to_uppercase()))
        .chain(RankTier::ALL.iter().map(|t| (format!("rank:{}", t.label()), t.label().to_string())))
        .collect();
    let mut out = String::from("|  |");
    for (_, title) in &cols {
        let _ = write!(out, " {title} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(cols.len()));
    let get = |m: &BTreeMap<String, u64>, k: &str| m.get(k).copied().unwrap_or(0);
    out.push_str("\n| Total policies |");
    for (k, _) in &cols {
        let _ = write!(out, " {} |", get(&total, k));
    }
    out.push_str("\n| With generator |");
    for (k, _) in &cols {
        let _ = write!(out, " {} |", get(&with, k));
    }
    out.push_str("\n| **Percentage** |");
    for (k, _) in &cols {
        let n = get(&total, k);
        let cell = if n == 0 { "NA".to_string() } else { format!("{}%", pct1(get(&with, k), n)) };
        let _ = write!(out, " {cell} |");
    }
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorComplianceRow {
    pub generator: String,
    pub label: String,
    /// Positive counts per obligation, in `Dimension::OBLIGATIONS` order.
    pub positives: Vec<u64>,
    pub policies: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorComplianceTable {
    pub single_only: bool,
    pub rows: Vec<GeneratorComplianceRow>,
}

/// Obligation rates per generator over October policies. With
/// `single_only`, policies naming two or more generators are dropped.
pub fn compliance_by_generator(
    docs: &[GeneratorDoc<'_>],
    dictionary: &GeneratorDictionary,
    single_only: bool,
) -> GeneratorComplianceTable {
    let mut rows: HashMap<&str, GeneratorComplianceRow> = HashMap::new();
    for d in docs.iter().filter(|d| d.study.is_policy() && d.study.window() == WindowLabel::Oct2023) {
        if d.study.group == Group::Excluded || (single_only && d.generators.len() != 1) {
            continue;
        }
        for g in &d.generators {
            let Some(spec) = dictionary.spec(g) else { continue };
            let row = rows.entry(spec.id.as_str()).or_insert_with(|| GeneratorComplianceRow {
                generator: spec.id.clone(),
                label: spec.label(),
                positives: vec![0; Dimension::OBLIGATIONS.len()],
                policies: 0,
            });
            row.policies += 1;
            for (i, dim) in Dimension::OBLIGATIONS.iter().enumerate() {
                row.positives[i] += u64::from(d.study.record.flag(*dim) == Some(true));
            }
        }
    }
    let mut rows: Vec<_> = rows.into_values().collect();
    rows.sort_by(|a, b| b.policies.cmp(&a.policies).then_with(|| a.generator.cmp(&b.generator)));
    GeneratorComplianceTable { single_only, rows }
}

impl GeneratorComplianceTable {
    pub fn total_policies(&self) -> u64 {
        self.rows.iter().map(|r| r.policies).sum()
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Generator |");
        for d in Dimension::OBLIGATIONS {
            let _ = write!(out, " {d} |");
        }
        out.push_str(" **Average** | **Policies** | **Market Share** |\n|---|");
        out.push_str(&"---:|".repeat(Dimension::OBLIGATIONS.len() + 3));
        out.push('\n');
        let total = self.total_policies();
        for r in &self.rows {
            let _ = write!(out, "| {} |", r.label);
            for k in &r.positives {
                let _ = write!(out, " {}% |", pct1(*k, r.policies));
            }
            let sum: u64 = r.positives.iter().sum();
            let _ = write!(
                out,
                " {}% | {} | {}% |",
                format_fixed(i128::from(sum) * 100, i128::from(r.policies) * r.positives.len() as i128, 1),
                r.policies,
                pct1(r.policies, total)
            );
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator");
        for d in Dimension::OBLIGATIONS {
            let _ = write!(out, ",{d}");
        }
        out.push_str(",policies\n");
        for r in &self.rows {
            out.push_str(&r.generator);
            for k in &r.positives {
                let _ = write!(out, ",{k}");
            }
            let _ = writeln!(out, ",{}", r.policies);
        }
        out
    }
}

/// October compliance without and with any generator.
pub fn generator_use_table(docs: &[GeneratorDoc<'_>]) -> String {
    let mut no: Vec<&AnnotationRecord> = Vec::new();
    let mut yes: Vec<&AnnotationRecord> = Vec::new();
    for d in docs.iter().filter(|d| d.study.is_policy() && d.study.window() == WindowLabel::Oct2023) {
        if d.study.group == Group::Excluded {
            continue;
        }
        if d.generators.is_empty() {
            no.push(d.study.record);
        } else {
            yes.push(d.study.record);
        }
    }
    let mut out = String::from("| Obligation | No | Yes | Δ p.p. |\n|---|---:|---:|---:|\n");
    let count = |rs: &[&AnnotationRecord], dim| rs.iter().filter(|r| r.flag(dim) == Some(true)).count() as i128;
    let cell = |k: i128, n: i128| if n == 0 { "NA".to_string() } else { format!("{}%", format_fixed(k * 100, n, 1)) };
    let (nn, ny) = (no.len() as i128, yes.len() as i128);
    let m = Dimension::OBLIGATIONS.len() as i128;
    let (mut sum_no, mut sum_yes) = (0, 0);
    let delta = |a: i128, da: i128, b: i128, db: i128| {
        if da == 0 || db == 0 {
            "NA".to_string()
        } else {
            format_signed((b * da - a * db) * 100, da * db, 1)
        }
    };
    for dim in Dimension::OBLIGATIONS {
        let (a, b) = (count(&no, dim), count(&yes, dim));
        sum_no += a;
        sum_yes += b;
        let _ = writeln!(out, "| {dim} | {} | {} | {} |", cell(a, nn), cell(b, ny), delta(a, nn, b, ny));
    }
    let _ = writeln!(
        out,
        "| **Average** | {} | {} | {} |",
        cell(sum_no, nn * m),
        cell(sum_yes, ny * m),
        delta(sum_no, nn * m, sum_yes, ny * m)
    );
    let _ = writeln!(out, "| **Total policies** | {nn} | {ny} | -- |");
    out
}

/// Collapses every whitespace run to one space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Fraction of `texts` containing `phrase` verbatim after whitespace
/// normalization of both.
pub fn boilerplate_share(texts: &[&str], phrase: &str) -> Result<f64, GeneratorError> {
    let needle = normalize_whitespace(phrase);
    if needle.is_empty() {
        return Err(GeneratorError::EmptyPhrase);
    }
    if texts.is_empty() {
        return Err(GeneratorError::NoDocuments);
    }
    let hits = texts.iter().filter(|t| normalize_whitespace(t).contains(&needle)).count();
    Ok(hits as f64 / texts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(text: &str) -> Vec<String> {
        GeneratorDictionary::default().detect(text).into_iter().collect()
    }

    #[test]
    fn bundled_dictionary() {
        let d = GeneratorDictionary::default();
        assert_eq!(d.specs().len(), 14);
        assert_eq!(d.spec("erecht24").unwrap().label(), "eRecht24 (DE)");
    }

    #[test]
    fn detection_examples() {
        assert_eq!(ids("Erstellt mit dem Datenschutz-Generator von eRecht24"), ["erecht24"]);
        assert!(ids("Wir verarbeiten Ihre Daten nur im Rahmen der Gesetze.").is_empty());
        assert_eq!(
            ids("Erstellt mit dem Datenschutz-Generator der DGD Deutsche Gesellschaft für Datenschutz in Kooperation mit Weiß & Partner"),
            ["dgd", "weisspartner"]
        );
        assert_eq!(ids("Quelle: Datenschutz-Generator.de von Dr. Thomas Schwenke"), ["schwenke"]);
        assert_eq!(ids("Generiert mit SwissAnwalt"), ["swissanwalt"]);
        assert_eq!(ids("Powered by iubenda"), ["iubenda"]);
    }

    #[test]
    fn conservative_patterns() {
        // a shop badge alone is not a generator reference
        assert!(ids("Wir nutzen das Trustbadge von Trusted Shops für Bewertungen.").is_empty());
        assert_eq!(ids("Rechtstexter von Trusted Shops"), ["trustedshops"]);
        assert!(ids("The dgd field and the swissanwaltschaft").is_empty());
        assert!(ids("mein Datenschutz ist wichtig").is_empty());
    }

    #[test]
    fn invalid_specs() {
        let spec = |id: &str, pats: &[&str]| GeneratorSpec {
            id: id.into(),
            display_name: "X".into(),
            country: "CH".into(),
            patterns: pats.iter().map(|s| s.to_string()).collect(),
        };
        assert!(GeneratorDictionary::new(vec![spec("a", &[])]).is_err());
        assert!(GeneratorDictionary::new(vec![spec("a", &["("])]).is_err());
        assert!(GeneratorDictionary::new(vec![spec("a", &["x"]), spec("a", &["y"])]).is_err());
        assert!(GeneratorDictionary::new(vec![spec("Bad Id", &["x"])]).is_err());
    }

    #[test]
    fn offsets_verify() {
        let d = GeneratorDictionary::default();
        let text = "Teil 1: eRecht24. Teil 2: erecht 24 und iubenda.";
        let report = d.scan("d", text);
        assert_eq!(report.matches.len(), 3);
        for (g, p, o) in &report.matches {
            assert!(d.verify(text, g, *p, *o));
        }
        assert!(!d.verify(text, "erecht24", 0, 1));
    }

    #[test]
    fn candidate_examples() {
        use crate::codebook::{AnnotationRecord, Source};
        let rec = |id: &str, org: Option<&str>| {
            let mut r = AnnotationRecord::empty(id, Source::RemoteLlm, "m");
            r.org = org.map(str::to_string);
            r
        };
        let c = propose_generator_candidates(&[
            rec("a", Some("eRecht24")),
            rec("b", Some("erecht24 ")),
            rec("c", Some("")),
        ]);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].raw_string.as_str(), c[0].frequency), ("erecht24", 2));
        assert_eq!(c[0].example_doc_ids, ["a", "b"]);
        assert!(propose_generator_candidates(&[rec("a", Some("  ")), rec("b", None)]).is_empty());
        let c = propose_generator_candidates(&[rec("a", Some("zeta")), rec("b", Some("alpha"))]);
        assert_eq!(c[0].raw_string, "alpha");
    }

    #[test]
    fn boilerplate_examples() {
        let p = "right to rectify";
        let docs = ["the right to rectify", "a right  to\nrectify", "right to rectify!", "nothing"];
        assert_eq!(boilerplate_share(&docs, p).unwrap(), 0.75);
        assert_eq!(boilerplate_share(&["a  right to\trectify"], "right  to rectify").unwrap(), 1.0);
        assert_eq!(boilerplate_share(&["Right to rectify"], p).unwrap(), 0.0);
        assert!(matches!(boilerplate_share(&[], p), Err(GeneratorError::NoDocuments)));
        assert!(matches!(boilerplate_share(&docs, "  "), Err(GeneratorError::EmptyPhrase)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn detection_monotone_and_order_free(a in "\\PC{0,80}", b in "\\PC{0,40}", pick in 0usize..14) {
            let d = GeneratorDictionary::default();
            let name = d.specs()[pick].display_name.clone();
            let text = format!("{a} {name} {b}");
            let base = d.detect(&a);
            let extended = d.detect(&format!("{a} {b}"));
            prop_assert!(base.is_subset(&extended));
            let mut reversed = d.specs().to_vec();
            reversed.reverse();
            let r = GeneratorDictionary::new(reversed).unwrap();
            prop_assert_eq!(d.detect(&text), r.detect(&text));
            for (g, p, o) in d.scan("x", &text).matches {
                prop_assert!(d.verify(&text, &g, p, o));
            }
        }
    }
}
