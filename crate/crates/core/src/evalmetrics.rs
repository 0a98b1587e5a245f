//! Inter-annotator reliability and validation metrics.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::{AnnotationRecord, Dimension};
use crate::corpus::Language;

/// Cells with fewer positive ground-truth cases than this get a warning.
pub const LOW_SUPPORT: u64 = 5;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("a reliability matrix needs at least two coders, got {0}")]
    TooFewCoders(usize),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("unknown coder `{0}`")]
    UnknownCoder(String),
    #[error("unit `{0}` has no values")]
    EmptyUnit(String),
    #[error("no unit has two or more values")]
    InsufficientPairs,
    #[error("expected disagreement is zero")]
    Degenerate,
    #[error("no documents to evaluate for {dimension} / {language}")]
    EmptyJoin { dimension: Dimension, language: String },
    #[error("document `{0}` occurs more than once")]
    DuplicateDoc(String),
    #[error("reports differ in cells: {missing:?}")]
    KeyMismatch { missing: Vec<String> },
}

/// Units × coders with optional categorical values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityMatrix {
    units: Vec<String>,
    coders: Vec<String>,
    values: BTreeMap<(usize, usize), String>,
}

impl ReliabilityMatrix {
    pub fn new(units: Vec<String>, coders: Vec<String>) -> Result<Self, MetricsError> {
        if coders.len() < 2 {
            return Err(MetricsError::TooFewCoders(coders.len()));
        }
        Ok(Self { units, coders, values: BTreeMap::new() })
    }

    pub fn set(&mut self, unit: &str, coder: &str, value: impl Into<String>) -> Result<(), MetricsError> {
        let u = self.units.iter().position(|x| x == unit).ok_or_else(|| MetricsError::UnknownUnit(unit.to_string()))?;
        let c =
            self.coders.iter().position(|x| x == coder).ok_or_else(|| MetricsError::UnknownCoder(coder.to_string()))?;
        self.values.insert((u, c), value.into());
        Ok(())
    }

    pub fn get(&self, unit: usize, coder: usize) -> Option<&str> {
        self.values.get(&(unit, coder)).map(String::as_str)
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn coders(&self) -> &[String] {
        &self.coders
    }

    /// One unit per doc, one coder per `backend_id`, values from `dim`.
    pub fn from_records(records: &[AnnotationRecord], dim: Dimension) -> Result<Self, MetricsError> {
        let mut units: Vec<String> = records.iter().map(|r| r.doc_id.clone()).collect();
        units.sort();
        units.dedup();
        let mut coders: Vec<String> = records.iter().map(|r| r.backend_id.clone()).collect();
        coders.sort();
        coders.dedup();
        let mut m = Self::new(units, coders)?;
        for r in records {
            m.set(&r.doc_id, &r.backend_id, r.value_label(dim))?;
        }
        Ok(m)
    }

    /// Rows of category indices, one row per unit, `None` for missing.
    fn coded(&self) -> Result<(Vec<Vec<Option<usize>>>, usize), MetricsError> {
        let mut categories: Vec<&str> = self.values.values().map(String::as_str).collect();
        categories.sort_unstable();
        categories.dedup();
        let mut rows = vec![vec![None; self.coders.len()]; self.units.len()];
        for ((u, c), v) in &self.values {
            rows[*u][*c] = categories.binary_search(&v.as_str()).ok();
        }
        if let Some(i) = rows.iter().position(|r| r.iter().all(Option::is_none)) {
            return Err(MetricsError::EmptyUnit(self.units[i].clone()));
        }
        Ok((rows, categories.len()))
    }
}

/// Nominal Krippendorff's alpha over a matrix with missing values.
pub fn krippendorff_alpha(matrix: &ReliabilityMatrix) -> Result<f64, MetricsError> {
    let (rows, k) = matrix.coded()?;
    alpha_nominal(&rows, k)
}

/// Coincidence-matrix alpha on pre-coded rows with categories `0..k`.
pub fn alpha_nominal(rows: &[Vec<Option<usize>>], k: usize) -> Result<f64, MetricsError> {
    let mut o = vec![0.0f64; k * k];
    let mut counts = vec![0u32; k];
    let mut pairable = false;
    for row in rows {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut m = 0u32;
        for v in row.iter().flatten() {
            counts[*v] += 1;
            m += 1;
        }
        if m < 2 {
            continue;
        }
        pairable = true;
        let w = 1.0 / f64::from(m - 1);
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d { counts[c] * (counts[c] - 1) } else { counts[c] * counts[d] };
                o[c * k + d] += f64::from(pairs) * w;
            }
        }
    }
    if !pairable {
        return Err(MetricsError::InsufficientPairs);
    }
    let marginals: Vec<f64> = (0..k).map(|c| o[c * k..(c + 1) * k].iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += o[c * k + d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    if expected == 0.0 {
        return Err(MetricsError::Degenerate);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn support_pos(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2tp / (2tp + fp + fn)`, NA when there is nothing to score.
    pub fn f1(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub support_pos: u64,
    pub counts: ConfusionCounts,
}

impl MetricCell {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            support_pos: counts.support_pos(),
            counts,
        }
    }

    pub fn low_support(&self) -> bool {
        self.support_pos < LOW_SUPPORT
    }
}

/// Tallies one dimension. For `upd` a prediction is a hit only when the
/// dates match exactly; a wrong date counts as both fp and fn.
pub fn confusion(pred: &AnnotationRecord, truth: &AnnotationRecord, dim: Dimension) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    if dim == Dimension::Upd {
        match (pred.upd, truth.upd) {
            (Some(p), Some(t)) if p == t => c.tp = 1,
            (Some(_), Some(_)) => {
                c.fp = 1;
                c.fn_ = 1;
            }
            (Some(_), None) => c.fp = 1,
            (None, Some(_)) => c.fn_ = 1,
            (None, None) => c.tn = 1,
        }
        return c;
    }
    match (pred.flag(dim) == Some(true), truth.flag(dim) == Some(true)) {
        (true, true) => c.tp = 1,
        (true, false) => c.fp = 1,
        (false, true) => c.fn_ = 1,
        (false, false) => c.tn = 1,
    }
    c
}

fn index_unique(records: &[AnnotationRecord]) -> Result<HashMap<&str, &AnnotationRecord>, MetricsError> {
    let mut out = HashMap::with_capacity(records.len());
    for r in records {
        if out.insert(r.doc_id.as_str(), r).is_some() {
            return Err(MetricsError::DuplicateDoc(r.doc_id.clone()));
        }
    }
    Ok(out)
}

fn joined<'a>(
    pred: &'a [AnnotationRecord],
    truth: &'a [AnnotationRecord],
) -> Result<Vec<(&'a AnnotationRecord, &'a AnnotationRecord)>, MetricsError> {
    let p = index_unique(pred)?;
    let mut pairs: Vec<_> = index_unique(truth)?.into_iter().filter_map(|(id, t)| p.get(id).map(|p| (*p, t))).collect();
    pairs.sort_by(|a, b| a.0.doc_id.cmp(&b.0.doc_id));
    Ok(pairs)
}

/// Precision, recall, F1 and positive support for one dimension, restricted
/// to docs whose language in `languages` equals `language` (all docs when
/// `language` is `None`).
pub fn prf1(
    pred: &[AnnotationRecord],
    truth: &[AnnotationRecord],
    dim: Dimension,
    languages: &BTreeMap<String, Language>,
    language: Option<Language>,
) -> Result<MetricCell, MetricsError> {
    let mut counts = ConfusionCounts::default();
    let mut n = 0;
    for (p, t) in joined(pred, truth)? {
        if let Some(lang) = language {
            if languages.get(&p.doc_id) != Some(&lang) {
                continue;
            }
        }
        let c = confusion(p, t, dim);
        counts.tp += c.tp;
        counts.fp += c.fp;
        counts.fn_ += c.fn_;
        counts.tn += c.tn;
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::EmptyJoin {
            dimension: dim,
            language: language.map_or("all".to_string(), |l| l.code().to_string()),
        });
    }
    Ok(MetricCell::from_counts(counts))
}

/// Per (dimension, language) validation results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub cells: BTreeMap<(Dimension, Language), MetricCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowSupportWarning {
    pub dimension: Dimension,
    pub language: Language,
    pub support_pos: u64,
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

impl MetricReport {
    /// Every metric dimension × every target language that has joined docs.
    pub fn build(
        pred: &[AnnotationRecord],
        truth: &[AnnotationRecord],
        languages: &BTreeMap<String, Language>,
    ) -> Result<Self, MetricsError> {
        let mut cells = BTreeMap::new();
        for lang in Language::TARGETS {
            for dim in Dimension::ALL {
                match prf1(pred, truth, dim, languages, Some(lang)) {
                    Ok(cell) => {
                        cells.insert((dim, lang), cell);
                    }
                    Err(MetricsError::EmptyJoin { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
        }
        if cells.is_empty() {
            return Err(MetricsError::EmptyJoin { dimension: Dimension::Ispol, language: "all".into() });
        }
        Ok(Self { cells })
    }

    pub fn low_support_warnings(&self) -> Vec<LowSupportWarning> {
        self.cells
            .iter()
            .filter(|(_, c)| c.low_support())
            .map(|((d, l), c)| LowSupportWarning { dimension: *d, language: *l, support_pos: c.support_pos })
            .collect()
    }

    /// Mean F1 for a dimension over languages, skipping NA cells.
    pub fn mean_f1(&self, dim: Dimension) -> Option<f64> {
        let vals: Vec<f64> = self.cells.iter().filter(|((d, _), _)| *d == dim).filter_map(|(_, c)| c.f1).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dimension,language,precision,recall,f1,support\n");
        for ((d, l), c) in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                d,
                l.code(),
                fmt_metric(c.precision),
                fmt_metric(c.recall),
                fmt_metric(c.f1),
                c.support_pos
            );
        }
        out
    }

    /// F1 (support) with one row per dimension and one column per language.
    pub fn to_markdown(&self) -> String {
        let langs: Vec<Language> =
            Language::TARGETS.into_iter().filter(|l| self.cells.keys().any(|(_, x)| x == l)).collect();
        let mut out = String::from("| Dimension |");
        for l in &langs {
            let _ = write!(out, " {} |", l.code());
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(langs.len()));
        out.push('\n');
        for dim in Dimension::ALL {
            if !self.cells.keys().any(|(d, _)| *d == dim) {
                continue;
            }
            let _ = write!(out, "| {dim} |");
            for l in &langs {
                match self.cells.get(&(dim, *l)) {
                    Some(c) => {
                        let mark = if c.low_support() { "†" } else { "" };
                        let _ = write!(out, " {} ({}){mark} |", fmt_metric(c.f1), c.support_pos);
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub delta: Option<f64>,
    pub support_pos: u64,
}

/// `f1_a - f1_b` per cell; both reports must have identical keys.
pub fn delta_f1(
    a: &MetricReport,
    b: &MetricReport,
) -> Result<BTreeMap<(Dimension, Language), DeltaCell>, MetricsError> {
    let mut missing: Vec<String> = a
        .cells
        .keys()
        .filter(|k| !b.cells.contains_key(k))
        .chain(b.cells.keys().filter(|k| !a.cells.contains_key(k)))
        .map(|(d, l)| format!("{d}/{}", l.code()))
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(MetricsError::KeyMismatch { missing });
    }
    Ok(a.cells
        .iter()
        .map(|(k, ca)| {
            let cb = &b.cells[k];
            let delta = ca.f1.zip(cb.f1).map(|(x, y)| x - y);
            (*k, DeltaCell { delta, support_pos: ca.support_pos })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Source;
    use proptest::prelude::*;

    /// Alpha straight from the definition: pairwise disagreement within
    /// units against pairwise disagreement over all pairable values.
    fn brute_alpha(rows: &[Vec<Option<usize>>]) -> Option<f64> {
        let mut within = 0.0;
        let mut pool = Vec::new();
        for row in rows {
            let vals: Vec<usize> = row.iter().flatten().copied().collect();
            if vals.len() < 2 {
                continue;
            }
            let mut d = 0.0;
            for i in 0..vals.len() {
                for j in 0..vals.len() {
                    if i != j && vals[i] != vals[j] {
                        d += 1.0;
                    }
                }
            }
            within += d / (vals.len() - 1) as f64;
            pool.extend(vals);
        }
        let n = pool.len() as f64;
        let mut between = 0.0;
        for i in 0..pool.len() {
            for j in 0..pool.len() {
                if i != j && pool[i] != pool[j] {
                    between += 1.0;
                }
            }
        }
        if between == 0.0 {
            return None;
        }
        Some(1.0 - (within / n) / (between / (n * (n - 1.0))))
    }

    fn matrix(a: &[u8], b: &[u8]) -> ReliabilityMatrix {
        let units: Vec<String> = (0..a.len()).map(|i| format!("u{i}")).collect();
        let mut m = ReliabilityMatrix::new(units.clone(), vec!["A".into(), "B".into()]).unwrap();
        for (i, u) in units.iter().enumerate() {
            m.set(u, "A", a[i].to_string()).unwrap();
            m.set(u, "B", b[i].to_string()).unwrap();
        }
        m
    }

    #[test]
    fn four_unit_example() {
        let alpha = krippendorff_alpha(&matrix(&[1, 0, 1, 0], &[1, 0, 1, 1])).unwrap();
        assert!((alpha - 0.533_333_333_333_333_3).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement_is_one() {
        assert_eq!(krippendorff_alpha(&matrix(&[1, 0, 1], &[1, 0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(krippendorff_alpha(&matrix(&[1, 1], &[1, 1])), Err(MetricsError::Degenerate));
        let mut m = ReliabilityMatrix::new(vec!["u".into()], vec!["A".into(), "B".into()]).unwrap();
        m.set("u", "A", "1").unwrap();
        assert_eq!(krippendorff_alpha(&m), Err(MetricsError::InsufficientPairs));
        assert_eq!(ReliabilityMatrix::new(vec![], vec!["A".into()]).unwrap_err(), MetricsError::TooFewCoders(1));
        let m = ReliabilityMatrix::new(vec!["u".into()], vec!["A".into(), "B".into()]).unwrap();
        assert_eq!(krippendorff_alpha(&m), Err(MetricsError::EmptyUnit("u".into())));
    }

    #[test]
    fn missing_values_match_oracle() {
        // 3 coders x 4 units, every cell in {missing, 0, 1}
        let cells = 12u32;
        for code in 0..3u32.pow(cells) {
            let mut c = code;
            let rows: Vec<Vec<Option<usize>>> = (0..4)
                .map(|_| {
                    (0..3)
                        .map(|_| {
                            let v = c % 3;
                            c /= 3;
                            (v > 0).then(|| (v - 1) as usize)
                        })
                        .collect()
                })
                .collect();
            let expected = brute_alpha(&rows);
            match alpha_nominal(&rows, 2) {
                Ok(a) => assert!((a - expected.unwrap()).abs() < 1e-12),
                Err(_) => assert!(expected.is_none()),
            }
        }
    }

    #[test]
    fn replication_converges_monotonically() {
        let base: Vec<Vec<Option<usize>>> =
            [[1, 1], [0, 0], [1, 0], [0, 0], [1, 1]].iter().map(|r| r.iter().map(|v| Some(*v)).collect()).collect();
        let alphas: Vec<f64> = (1..=6)
            .map(|k| {
                let rows: Vec<_> = base.iter().cycle().take(base.len() * k).cloned().collect();
                alpha_nominal(&rows, 2).unwrap()
            })
            .collect();
        for w in alphas.windows(3) {
            assert!((w[2] - w[1]).abs() < (w[1] - w[0]).abs());
            assert!((w[2] - w[1]).signum() == (w[1] - w[0]).signum());
        }
    }

    fn rec(id: &str, flag: bool) -> AnnotationRecord {
        let mut r = AnnotationRecord::empty(id, Source::Baseline, "b");
        r.ispol = true;
        r.contr = flag;
        r
    }

    #[test]
    fn prf1_formula_example() {
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        let mut push = |i: usize, p: bool, t: bool| {
            pred.push(rec(&format!("d{i}"), p));
            truth.push(rec(&format!("d{i}"), t));
        };
        let mut i = 0;
        for (p, t, n) in [(true, true, 8), (true, false, 2), (false, true, 2), (false, false, 5)] {
            for _ in 0..n {
                push(i, p, t);
                i += 1;
            }
        }
        let cell = prf1(&pred, &truth, Dimension::Contr, &BTreeMap::new(), None).unwrap();
        assert!((cell.precision.unwrap() - 0.8).abs() < 1e-12);
        assert!((cell.recall.unwrap() - 0.8).abs() < 1e-12);
        assert!((cell.f1.unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(cell.support_pos, 10);
    }

    #[test]
    fn all_negative_is_na() {
        let pred = vec![rec("a", false), rec("b", false)];
        let cell = prf1(&pred, &pred, Dimension::Contr, &BTreeMap::new(), None).unwrap();
        assert_eq!((cell.precision, cell.recall, cell.f1, cell.support_pos), (None, None, None, 0));
        assert!(cell.low_support());
    }

    #[test]
    fn language_filter_and_empty_join() {
        let pred = vec![rec("a", true), rec("b", false)];
        let langs: BTreeMap<String, Language> =
            [("a".to_string(), Language::De), ("b".to_string(), Language::Fr)].into();
        let de = prf1(&pred, &pred, Dimension::Contr, &langs, Some(Language::De)).unwrap();
        assert_eq!(de.counts.total(), 1);
        assert!(matches!(
            prf1(&pred, &pred, Dimension::Contr, &langs, Some(Language::It)),
            Err(MetricsError::EmptyJoin { .. })
        ));
        assert!(matches!(prf1(&pred, &[], Dimension::Contr, &langs, None), Err(MetricsError::EmptyJoin { .. })));
    }

    #[test]
    fn upd_wrong_date_counts_twice() {
        let mut p = rec("a", true);
        let mut t = rec("a", true);
        p.upd = chrono::NaiveDate::from_ymd_opt(2023, 1, 1);
        t.upd = chrono::NaiveDate::from_ymd_opt(2023, 2, 1);
        let c = confusion(&p, &t, Dimension::Upd);
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (0, 1, 1, 0));
    }

    fn report(cells: &[((Dimension, Language), Option<f64>)]) -> MetricReport {
        MetricReport {
            cells: cells
                .iter()
                .map(|(k, f1)| {
                    (
                        *k,
                        MetricCell {
                            precision: *f1,
                            recall: *f1,
                            f1: *f1,
                            support_pos: 10,
                            counts: Default::default(),
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn delta_f1_cases() {
        let k = (Dimension::Contr, Language::En);
        let a = report(&[(k, Some(0.93))]);
        let b = report(&[(k, Some(0.87))]);
        assert!((delta_f1(&a, &b).unwrap()[&k].delta.unwrap() - 0.06).abs() < 1e-12);
        assert_eq!(delta_f1(&a, &a).unwrap()[&k].delta, Some(0.0));
        let na = report(&[(k, None)]);
        assert_eq!(delta_f1(&na, &b).unwrap()[&k].delta, None);
        let other = report(&[((Dimension::Port, Language::En), Some(0.5))]);
        match delta_f1(&a, &other) {
            Err(MetricsError::KeyMismatch { missing }) => assert_eq!(missing, vec!["contr/en", "port/en"]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn report_outputs() {
        let pred = vec![rec("a", true), rec("b", false)];
        let langs: BTreeMap<String, Language> =
            [("a".to_string(), Language::De), ("b".to_string(), Language::De)].into();
        let r = MetricReport::build(&pred, &pred, &langs).unwrap();
        assert_eq!(r.cells.len(), 9);
        let csv = r.to_csv();
        assert!(csv.contains("contr,de,1.0000,1.0000,1.0000,1\n"));
        assert!(csv.contains("port,de,NA,NA,NA,0\n"));
        assert!(r.to_markdown().contains("| contr | 1.0000 (1)† |"));
        assert_eq!(r.mean_f1(Dimension::Port), None);
        assert!(r.low_support_warnings().len() >= 7);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<Vec<Option<usize>>>> {
        (2usize..5, 1usize..8)
            .prop_flat_map(|(c, u)| prop::collection::vec(prop::collection::vec(prop::option::of(0usize..3), c), u))
    }

    proptest! {
        #[test]
        fn alpha_invariances(rows in arb_rows(), perm in Just([2usize, 0, 1]), seed in any::<u64>()) {
            let Ok(a) = alpha_nominal(&rows, 3) else { return Ok(()); };
            prop_assert!(a <= 1.0 + 1e-12);
            let relabeled: Vec<Vec<Option<usize>>> =
                rows.iter().map(|r| r.iter().map(|v| v.map(|x| perm[x])).collect()).collect();
            prop_assert!((alpha_nominal(&relabeled, 3).unwrap() - a).abs() < 1e-12);
            let mut shuffled = rows.clone();
            let len = shuffled.len();
            shuffled.rotate_left((seed as usize) % len);
            for r in shuffled.iter_mut() {
                r.reverse();
            }
            prop_assert!((alpha_nominal(&shuffled, 3).unwrap() - a).abs() < 1e-12);
            prop_assert!((brute_alpha(&rows).unwrap() - a).abs() < 1e-12);
        }

        #[test]
        fn prf1_properties(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let c = ConfusionCounts { tp, fp, fn_, tn };
            if let (Some(p), Some(r)) = (c.precision(), c.recall()) {
                let f = c.f1().unwrap();
                if p + r > 0.0 {
                    prop_assert!((f - 2.0 * p * r / (p + r)).abs() < 1e-12);
                } else {
                    prop_assert_eq!(f, 0.0);
                }
            }
            let sym = ConfusionCounts { tp, fp, fn_: fp, tn };
            if let Some(p) = sym.precision() {
                prop_assert_eq!(Some(p), sym.recall());
                prop_assert!((sym.f1().unwrap() - p).abs() < 1e-12);
            }
            for v in [c.precision(), c.recall(), c.f1()].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
