//! Compliance tables: per-obligation proportions on two sides of a
//! contrast, with tests, exported as CSV and Markdown.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{test_family, ProportionSample, StatsError, TestResult};
use crate::codebook::{AnnotationRecord, Dimension};
use crate::cohort::{Group, StudyDoc};
use crate::corpus::{Language, WindowLabel};

/// `num/den` rounded half-up to `decimals` places, computed exactly.
pub fn format_fixed(num: i128, den: i128, decimals: u32) -> String {
    assert!(den > 0, "denominator must be positive");
    let scale = 10i128.pow(decimals);
    let mag = (2 * num.abs() * scale + den) / (2 * den);
    let sign = if num < 0 && mag > 0 { "-" } else { "" };
    if decimals == 0 {
        return format!("{sign}{mag}");
    }
    format!("{sign}{}.{:0width$}", mag / scale, mag % scale, width = decimals as usize)
}

/// Like [`format_fixed`] with an explicit sign taken from the unrounded
/// value, so a small negative difference prints as `-0.0`.
pub fn format_signed(num: i128, den: i128, decimals: u32) -> String {
    let body = format_fixed(num.abs(), den, decimals);
    if num < 0 {
        format!("-{body}")
    } else {
        format!("+{body}")
    }
}

pub fn format_pct(s: ProportionSample) -> String {
    format_fixed(i128::from(s.successes) * 100, i128::from(s.n), 1)
}

/// Percentage-point change from `left` to `right`, one decimal.
pub fn format_delta(left: ProportionSample, right: ProportionSample) -> String {
    let (s1, n1) = (i128::from(left.successes), i128::from(left.n));
    let (s2, n2) = (i128::from(right.successes), i128::from(right.n));
    format_signed((s2 * n1 - s1 * n2) * 100, n1 * n2, 1)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRow {
    pub obligation: Dimension,
    pub left: Option<ProportionSample>,
    pub right: Option<ProportionSample>,
    pub test: Option<TestResult>,
}

impl ContrastRow {
    /// True when the significance call sits close to either threshold:
    /// q within a factor of two of alpha, or h within 10% of the MDE.
    pub fn borderline(&self, alpha: f64) -> bool {
        self.test.is_some_and(|t| {
            (0.5 * alpha..=2.0 * alpha).contains(&t.q_value) || (0.9 * t.mde_h..=1.1 * t.mde_h).contains(&t.h)
        })
    }

    pub fn delta_pp(&self) -> Option<f64> {
        Some(100.0 * (self.right?.proportion() - self.left?.proportion()))
    }
}

/// One two-sided comparison, e.g. a group's August against October policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub label: String,
    pub left_label: String,
    pub right_label: String,
    pub left_n: u64,
    pub right_n: u64,
    pub rows: Vec<ContrastRow>,
    /// Why no tests were run, if so.
    pub flag: Option<String>,
}

fn sample(records: &[&AnnotationRecord], dim: Dimension) -> Option<ProportionSample> {
    let n = records.len() as u64;
    let k = records.iter().filter(|r| r.flag(dim) == Some(true)).count() as u64;
    ProportionSample::new(k, n).ok()
}

/// Builds a contrast over policies only (`ispol` true); the seven
/// obligations form one FDR family.
pub fn build_contrast(
    label: &str,
    left_label: &str,
    right_label: &str,
    left: &[&AnnotationRecord],
    right: &[&AnnotationRecord],
    alpha: f64,
    power: f64,
) -> Result<Contrast, StatsError> {
    let left: Vec<&AnnotationRecord> = left.iter().copied().filter(|r| r.ispol).collect();
    let right: Vec<&AnnotationRecord> = right.iter().copied().filter(|r| r.ispol).collect();
    let mut rows: Vec<ContrastRow> = Dimension::OBLIGATIONS
        .iter()
        .map(|d| ContrastRow { obligation: *d, left: sample(&left, *d), right: sample(&right, *d), test: None })
        .collect();
    let flag = if left.len() < 2 || right.len() < 2 {
        Some(format!("too few policies to test ({} vs {})", left.len(), right.len()))
    } else {
        let pairs: Vec<_> = rows.iter().map(|r| (r.left.unwrap(), r.right.unwrap())).collect();
        for (row, t) in rows.iter_mut().zip(test_family(&pairs, alpha, power)?) {
            row.test = Some(t);
        }
        None
    };
    Ok(Contrast {
        label: label.to_string(),
        left_label: left_label.to_string(),
        right_label: right_label.to_string(),
        left_n: left.len() as u64,
        right_n: right.len() as u64,
        rows,
        flag,
    })
}

impl Contrast {
    /// Mean over obligations as `(num, den)` of a percentage.
    fn average(&self, right: bool) -> Option<(i128, i128)> {
        let n = i128::from(if right { self.right_n } else { self.left_n });
        if n == 0 {
            return None;
        }
        let total: i128 = self
            .rows
            .iter()
            .filter_map(|r| if right { r.right } else { r.left })
            .map(|s| i128::from(s.successes))
            .sum();
        Some((total * 100, n * self.rows.len() as i128))
    }

    fn average_cells(&self) -> [String; 3] {
        let na = || "NA".to_string();
        match (self.average(false), self.average(true)) {
            (Some((a, da)), Some((b, db))) => [
                format!("{}%", format_fixed(a, da, 1)),
                format!("{}%", format_fixed(b, db, 1)),
                format_signed(b * da - a * db, da * db, 1),
            ],
            (l, r) => [
                l.map_or_else(na, |(a, d)| format!("{}%", format_fixed(a, d, 1))),
                r.map_or_else(na, |(a, d)| format!("{}%", format_fixed(a, d, 1))),
                na(),
            ],
        }
    }

    fn cells(&self, row: &ContrastRow, mark: bool) -> [String; 3] {
        let pct = |s: Option<ProportionSample>| s.map_or_else(|| "NA".to_string(), |s| format!("{}%", format_pct(s)));
        let delta = match (row.left, row.right) {
            (Some(l), Some(r)) => {
                let star = if mark && row.test.is_some_and(|t| t.significant) { "*" } else { "" };
                format!("{}{star}", format_delta(l, r))
            }
            _ => "NA".to_string(),
        };
        [pct(row.left), pct(row.right), delta]
    }
}

const CSV_HEADER: &str = "contrast,left,right,obligation,left_successes,left_n,left_pct,right_successes,right_n,right_pct,delta_pp,z,p_value,q_value,h,mde_h,mde_pp,significant,borderline\n";

fn contrasts_csv(contrasts: &[Contrast], alpha: f64) -> String {
    let mut out = String::from(CSV_HEADER);
    for c in contrasts {
        for r in &c.rows {
            let side = |s: Option<ProportionSample>| match s {
                Some(s) => (s.successes.to_string(), format_pct(s)),
                None => ("0".to_string(), "NA".to_string()),
            };
            let (ls, lp) = side(r.left);
            let (rs, rp) = side(r.right);
            let delta = match (r.left, r.right) {
                (Some(a), Some(b)) => format_delta(a, b),
                _ => "NA".to_string(),
            };
            let t = r.test;
            let _ = writeln!(
                out,
                "{},{},{},{},{ls},{},{lp},{rs},{},{rp},{delta},{},{},{},{},{},{},{},{}",
                c.label,
                c.left_label,
                c.right_label,
                r.obligation,
                c.left_n,
                c.right_n,
                fmt_opt(t.and_then(|t| t.z)),
                fmt_opt(t.map(|t| t.p_value)),
                fmt_opt(t.map(|t| t.q_value)),
                fmt_opt(t.map(|t| t.h)),
                fmt_opt(t.map(|t| t.mde_h)),
                fmt_opt(t.map(|t| t.mde_pp)),
                t.is_some_and(|t| t.significant),
                r.borderline(alpha),
            );
        }
    }
    out
}

/// Markdown with three columns per contrast (left, right, Δ p.p.).
fn contrasts_markdown(contrasts: &[Contrast], mark: bool, extra: Option<&LanguageColumns>) -> String {
    let mut out = String::from("|  |");
    for c in contrasts {
        let _ = write!(out, " {} {} | {} {} | {} Δ p.p. |", c.label, c.left_label, c.label, c.right_label, c.label);
    }
    if let Some(x) = extra {
        for (lang, _) in &x.columns {
            let _ = write!(out, " {} |", lang.code());
        }
    }
    out.push_str("\n|---|");
    let ncols = contrasts.len() * 3 + extra.map_or(0, |x| x.columns.len());
    out.push_str(&"---:|".repeat(ncols));
    out.push('\n');
    for (i, dim) in Dimension::OBLIGATIONS.iter().enumerate() {
        let _ = write!(out, "| {dim} |");
        for c in contrasts {
            for cell in c.cells(&c.rows[i], mark) {
                let _ = write!(out, " {cell} |");
            }
        }
        if let Some(x) = extra {
            for (_, col) in &x.columns {
                let cell = col.rows[i].left.map_or_else(|| "NA".to_string(), |s| format!("{}%", format_pct(s)));
                let _ = write!(out, " {cell} |");
            }
        }
        out.push('\n');
    }
    out.push_str("| **Average** |");
    for c in contrasts {
        for cell in c.average_cells() {
            let _ = write!(out, " {cell} |");
        }
    }
    if let Some(x) = extra {
        for (_, col) in &x.columns {
            let _ = write!(out, " {} |", col.average_cells()[0]);
        }
    }
    out.push_str("\n| **Total policies** |");
    for c in contrasts {
        let _ = write!(out, " {} | {} | -- |", c.left_n, c.right_n);
    }
    if let Some(x) = extra {
        for (_, col) in &x.columns {
            let _ = write!(out, " {} |", col.left_n);
        }
    }
    out.push('\n');
    out
}

/// Per-group August against October compliance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationTable {
    pub alpha: f64,
    pub contrasts: Vec<Contrast>,
}

impl ObligationTable {
    pub fn get(&self, label: &str) -> Option<&Contrast> {
        self.contrasts.iter().find(|c| c.label == label)
    }

    pub fn to_csv(&self) -> String {
        contrasts_csv(&self.contrasts, self.alpha)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = contrasts_markdown(&self.contrasts, true, None);
        out.push_str("\n\\* significant after BH-FDR (q < ");
        out.push_str(&format!("{}", self.alpha));
        out.push_str(") and at least the MDE at 80% power.\n");
        for c in &self.contrasts {
            if let Some(f) = &c.flag {
                let _ = writeln!(out, "{}: {f}", c.label);
            }
        }
        out
    }
}

pub fn compliance_table(docs: &[StudyDoc<'_>], alpha: f64, power: f64) -> Result<ObligationTable, StatsError> {
    let mut contrasts = Vec::new();
    for g in Group::STUDY {
        let pick = |w| -> Vec<&AnnotationRecord> {
            docs.iter().filter(|d| d.group == g && d.window() == w).map(|d| d.record).collect()
        };
        let aug = pick(WindowLabel::Aug2023);
        let oct = pick(WindowLabel::Oct2023);
        contrasts.push(build_contrast(g.title(), "Aug", "Oct", &aug, &oct, alpha, power)?);
    }
    Ok(ObligationTable { alpha, contrasts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LanguageColumns {
    columns: Vec<(Language, Contrast)>,
}

/// October compliance split by update status, popularity and language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedTable {
    pub alpha: f64,
    pub contrasts: Vec<Contrast>,
    languages: LanguageColumns,
}

impl StratifiedTable {
    pub fn to_csv(&self) -> String {
        let mut all = self.contrasts.clone();
        all.extend(self.languages.columns.iter().map(|(_, c)| c.clone()));
        contrasts_csv(&all, self.alpha)
    }

    pub fn to_markdown(&self) -> String {
        contrasts_markdown(&self.contrasts, false, Some(&self.languages))
    }

    pub fn language(&self, lang: Language) -> Option<&Contrast> {
        self.languages.columns.iter().find(|(l, _)| *l == lang).map(|(_, c)| c)
    }
}

pub fn stratified_table(docs: &[StudyDoc<'_>], alpha: f64, power: f64) -> Result<StratifiedTable, StatsError> {
    let october: Vec<&StudyDoc> =
        docs.iter().filter(|d| d.window() == WindowLabel::Oct2023 && d.group != Group::Excluded).collect();
    let split = |f: &dyn Fn(&StudyDoc) -> Option<bool>| {
        let mut no = Vec::new();
        let mut yes = Vec::new();
        for d in &october {
            match f(d) {
                Some(true) => yes.push(d.record),
                Some(false) => no.push(d.record),
                None => {}
            }
        }
        (no, yes)
    };
    let (no, yes) = split(&|d| d.october_update);
    let update = build_contrast("October update", "no", "yes", &no, &yes, alpha, power)?;
    let (no, yes) = split(&|d| Some(d.doc.website.is_top_5k()));
    let top = build_contrast("Top 5k website", "no", "yes", &no, &yes, alpha, power)?;
    let mut columns = Vec::new();
    for lang in [Language::De, Language::En, Language::It, Language::Fr] {
        let recs: Vec<&AnnotationRecord> =
            october.iter().filter(|d| d.doc.language == lang).map(|d| d.record).collect();
        let col = build_contrast(&format!("Language {}", lang.code()), lang.code(), "-", &recs, &[], alpha, power)?;
        columns.push((lang, col));
    }
    Ok(StratifiedTable { alpha, contrasts: vec![update, top], languages: LanguageColumns { columns } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Source;
    use proptest::prelude::*;

    #[test]
    fn half_up_formatting() {
        assert_eq!(format_fixed(1, 8, 2), "0.13");
        assert_eq!(format_fixed(5, 200, 2), "0.03");
        assert_eq!(format_fixed(2525, 1000, 1), "2.5");
        assert_eq!(format_fixed(2550, 1000, 1), "2.6");
        assert_eq!(format_fixed(-2550, 1000, 1), "-2.6");
        assert_eq!(format_fixed(-1, 1000, 1), "0.0");
        assert_eq!(format_fixed(7, 2, 0), "4");
        assert_eq!(format_signed(-1, 1000, 1), "-0.0");
        assert_eq!(format_signed(0, 1000, 1), "+0.0");
        assert_eq!(format_signed(139, 10, 1), "+13.9");
    }

    #[test]
    fn delta_uses_raw_proportions() {
        let a = ProportionSample::new(750, 1000).unwrap();
        let b = ProportionSample::new(8885, 10000).unwrap();
        // 88.85 - 75.0 = 13.85 -> +13.9 even though rounded cells differ by 13.8/13.9
        assert_eq!(format_delta(a, b), "+13.9");
    }

    fn rec(i: usize, ispol: bool, port: bool) -> AnnotationRecord {
        let mut r = AnnotationRecord::empty(&format!("d{i}"), Source::Baseline, "b");
        r.ispol = ispol;
        r.port = port && ispol;
        r
    }

    #[test]
    fn identical_waves_are_flat() {
        let recs: Vec<AnnotationRecord> = (0..200).map(|i| rec(i, true, i % 3 == 0)).collect();
        let refs: Vec<&AnnotationRecord> = recs.iter().collect();
        let c = build_contrast("G", "Aug", "Oct", &refs, &refs, 0.05, 0.8).unwrap();
        assert!(c.rows.iter().all(|r| r.delta_pp() == Some(0.0)));
        assert!(c.rows.iter().all(|r| !r.test.unwrap().significant));
        assert_eq!(c.average_cells()[2], "+0.0");
    }

    #[test]
    fn constructed_increase_is_significant() {
        let aug: Vec<AnnotationRecord> = (0..2000).map(|i| rec(i, true, i % 2 == 0)).collect();
        let oct: Vec<AnnotationRecord> = (0..2000).map(|i| rec(i, true, true)).collect();
        let non_policy = rec(9999, false, true);
        let mut a: Vec<&AnnotationRecord> = aug.iter().collect();
        a.push(&non_policy);
        let b: Vec<&AnnotationRecord> = oct.iter().collect();
        let c = build_contrast("G", "Aug", "Oct", &a, &b, 0.05, 0.8).unwrap();
        assert_eq!(c.left_n, 2000);
        let port = c.rows.iter().find(|r| r.obligation == Dimension::Port).unwrap();
        assert!(port.delta_pp().unwrap() > 0.0);
        assert!(port.test.unwrap().significant);
    }

    #[test]
    fn empty_side_is_flagged() {
        let recs: Vec<AnnotationRecord> = (0..10).map(|i| rec(i, true, true)).collect();
        let refs: Vec<&AnnotationRecord> = recs.iter().collect();
        let c = build_contrast("G", "Aug", "Oct", &refs, &[], 0.05, 0.8).unwrap();
        assert!(c.flag.is_some());
        assert!(c.rows.iter().all(|r| r.test.is_none() && r.right.is_none()));
        let md = contrasts_markdown(&[c], true, None);
        assert!(md.contains("| port | 100.0% | NA | NA |"));
    }

    proptest! {
        #[test]
        fn fixed_matches_float_rounding(num in 0i128..1_000_000, den in 1i128..10_000) {
            let s = format_fixed(num, den, 2);
            let v: f64 = s.parse().unwrap();
            prop_assert!((v - num as f64 / den as f64).abs() <= 0.005 + 1e-9);
        }
    }
}
