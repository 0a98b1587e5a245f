//! The nine-question compliance codebook, annotation records and the global
//! consistency rules applied to every annotation source.

mod dates;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dates::{extract_date_candidates, format_date, normalize_update_date, parse_date};

/// Embedded default codebook.
pub const DEFAULT_CODEBOOK_JSON: &str = include_str!("../../data/codebook.json");

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("codebook must have exactly nine dimensions, got {0}")]
    WrongSize(usize),
    #[error("codebook is missing dimension `{0}`")]
    Missing(Dimension),
    #[error("dimension `{0}` listed twice")]
    Duplicate(Dimension),
    #[error("dimension `{code}` must be of kind {expected:?}")]
    WrongKind { code: Dimension, expected: ValueKind },
    #[error("invalid codebook JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Ispol,
    Upd,
    Contr,
    Purp,
    Rect,
    Forg,
    Port,
    Comp,
    Hum,
}

impl Dimension {
    pub const ALL: [Dimension; 9] = [
        Dimension::Ispol,
        Dimension::Upd,
        Dimension::Contr,
        Dimension::Purp,
        Dimension::Rect,
        Dimension::Forg,
        Dimension::Port,
        Dimension::Comp,
        Dimension::Hum,
    ];

    /// The seven compliance obligations.
    pub const OBLIGATIONS: [Dimension; 7] = [
        Dimension::Contr,
        Dimension::Purp,
        Dimension::Rect,
        Dimension::Forg,
        Dimension::Port,
        Dimension::Comp,
        Dimension::Hum,
    ];

    /// Every boolean-valued dimension (`ispol` plus the obligations).
    pub const BOOLEAN: [Dimension; 8] = [
        Dimension::Ispol,
        Dimension::Contr,
        Dimension::Purp,
        Dimension::Rect,
        Dimension::Forg,
        Dimension::Port,
        Dimension::Comp,
        Dimension::Hum,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Dimension::Ispol => "ispol",
            Dimension::Upd => "upd",
            Dimension::Contr => "contr",
            Dimension::Purp => "purp",
            Dimension::Rect => "rect",
            Dimension::Forg => "forg",
            Dimension::Port => "port",
            Dimension::Comp => "comp",
            Dimension::Hum => "hum",
        }
    }

    pub fn value_kind(self) -> ValueKind {
        match self {
            Dimension::Upd => ValueKind::Date,
            _ => ValueKind::Boolean,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.code() == s.trim())
            .ok_or_else(|| format!("unknown codebook dimension `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Boolean,
    Date,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookDimension {
    pub code: Dimension,
    pub question: String,
    pub legal_basis: String,
    pub value_kind: ValueKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub instructions: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub positive_example: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub negative_example: String,
}

/// A validated codebook: exactly the nine dimensions, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Codebook {
    dimensions: Vec<CodebookDimension>,
}

impl Codebook {
    pub fn new(dimensions: Vec<CodebookDimension>) -> Result<Self, CodebookError> {
        if dimensions.len() != Dimension::ALL.len() {
            return Err(CodebookError::WrongSize(dimensions.len()));
        }
        let mut ordered = Vec::with_capacity(9);
        for dim in Dimension::ALL {
            let mut matching = dimensions.iter().filter(|d| d.code == dim);
            let entry = matching.next().ok_or(CodebookError::Missing(dim))?;
            if matching.next().is_some() {
                return Err(CodebookError::Duplicate(dim));
            }
            if entry.value_kind != dim.value_kind() {
                return Err(CodebookError::WrongKind { code: dim, expected: dim.value_kind() });
            }
            ordered.push(entry.clone());
        }
        Ok(Self { dimensions: ordered })
    }

    pub fn from_json(json: &str) -> Result<Self, CodebookError> {
        Self::new(serde_json::from_str(json)?)
    }

    pub fn dimensions(&self) -> &[CodebookDimension] {
        &self.dimensions
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.dimensions).expect("codebook serializes")
    }
}

impl Default for Codebook {
    fn default() -> Self {
        Self::from_json(DEFAULT_CODEBOOK_JSON).expect("embedded codebook is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    RemoteLlm,
    Baseline,
    Human,
}

/// `upd` serialized as `DD/MM/YYYY` or `"NA"`.
pub mod upd_format {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<NaiveDate>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(d) => s.serialize_str(&format_date(*d)),
            None => s.serialize_str("NA"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NaiveDate>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        match raw.as_deref().map(str::trim) {
            None | Some("") | Some("NA") => Ok(None),
            Some(s) => parse_date(s).map(Some).ok_or_else(|| serde::de::Error::custom(format!("invalid date `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub doc_id: String,
    pub source: Source,
    /// Model id for machine backends, coder id for human annotations.
    pub backend_id: String,
    pub ispol: bool,
    #[serde(with = "upd_format")]
    pub upd: Option<NaiveDate>,
    pub contr: bool,
    pub purp: bool,
    pub rect: bool,
    pub forg: bool,
    pub port: bool,
    pub comp: bool,
    pub hum: bool,
    /// Exploratory tool/template mention (discovery schema only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org: Option<String>,
    pub created_at: String,
    #[serde(default)]
    pub raw_payload: String,
}

impl AnnotationRecord {
    /// An all-false record.
    pub fn empty(doc_id: &str, source: Source, backend_id: &str) -> Self {
        Self {
            doc_id: doc_id.to_string(),
            source,
            backend_id: backend_id.to_string(),
            ispol: false,
            upd: None,
            contr: false,
            purp: false,
            rect: false,
            forg: false,
            port: false,
            comp: false,
            hum: false,
            org: None,
            created_at: String::new(),
            raw_payload: String::new(),
        }
    }

    /// Value of a boolean dimension; `None` for `upd`.
    pub fn flag(&self, dim: Dimension) -> Option<bool> {
        Some(match dim {
            Dimension::Ispol => self.ispol,
            Dimension::Upd => return None,
            Dimension::Contr => self.contr,
            Dimension::Purp => self.purp,
            Dimension::Rect => self.rect,
            Dimension::Forg => self.forg,
            Dimension::Port => self.port,
            Dimension::Comp => self.comp,
            Dimension::Hum => self.hum,
        })
    }

    pub fn set_flag(&mut self, dim: Dimension, value: bool) {
        match dim {
            Dimension::Ispol => self.ispol = value,
            Dimension::Upd => {}
            Dimension::Contr => self.contr = value,
            Dimension::Purp => self.purp = value,
            Dimension::Rect => self.rect = value,
            Dimension::Forg => self.forg = value,
            Dimension::Port => self.port = value,
            Dimension::Comp => self.comp = value,
            Dimension::Hum => self.hum = value,
        }
    }

    /// Categorical value of any dimension, as used for agreement.
    pub fn value_label(&self, dim: Dimension) -> String {
        match dim {
            Dimension::Upd => self.upd.map(format_date).unwrap_or_else(|| "NA".into()),
            _ => u8::from(self.flag(dim).unwrap_or(false)).to_string(),
        }
    }

    /// True when the screening cascade holds.
    pub fn is_consistent(&self) -> bool {
        self.ispol || (self.upd.is_none() && Dimension::OBLIGATIONS.iter().all(|d| self.flag(*d) == Some(false)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationWarning {
    pub doc_id: String,
    pub field: Dimension,
    pub message: String,
}

/// Enforces the screening cascade: a non-policy carries no obligations and
/// no update date. One warning per field that had to be changed.
pub fn normalize_record(record: &AnnotationRecord) -> (AnnotationRecord, Vec<NormalizationWarning>) {
    let mut out = record.clone();
    let mut warnings = Vec::new();
    if out.ispol {
        return (out, warnings);
    }
    for dim in Dimension::OBLIGATIONS {
        if out.flag(dim) == Some(true) {
            out.set_flag(dim, false);
            warnings.push(NormalizationWarning {
                doc_id: out.doc_id.clone(),
                field: dim,
                message: format!("ispol=false forces {dim}=false"),
            });
        }
    }
    if out.upd.take().is_some() {
        warnings.push(NormalizationWarning {
            doc_id: out.doc_id.clone(),
            field: Dimension::Upd,
            message: "ispol=false forces upd=NA".into(),
        });
    }
    (out, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec() -> AnnotationRecord {
        AnnotationRecord::empty("d1", Source::Human, "coder1")
    }

    #[test]
    fn default_codebook_has_nine() {
        let cb = Codebook::default();
        assert_eq!(cb.dimensions().len(), 9);
        let dates: Vec<_> = cb.dimensions().iter().filter(|d| d.value_kind == ValueKind::Date).collect();
        assert_eq!(dates.len(), 1);
        assert_eq!(dates[0].code, Dimension::Upd);
        let round = Codebook::from_json(&cb.to_json()).unwrap();
        assert_eq!(round, cb);
    }

    #[test]
    fn eight_dimensions_rejected() {
        let mut dims = Codebook::default().dimensions().to_vec();
        dims.pop();
        assert!(matches!(Codebook::new(dims), Err(CodebookError::WrongSize(8))));
    }

    #[test]
    fn duplicate_and_kind_errors() {
        let mut dims = Codebook::default().dimensions().to_vec();
        dims[8] = dims[7].clone();
        assert!(matches!(Codebook::new(dims), Err(CodebookError::Duplicate(Dimension::Comp))));
        let mut dims = Codebook::default().dimensions().to_vec();
        dims[2].value_kind = ValueKind::Date;
        assert!(matches!(Codebook::new(dims), Err(CodebookError::WrongKind { .. })));
    }

    #[test]
    fn cascade_forces_obligations() {
        let mut r = rec();
        r.contr = true;
        let (n, w) = normalize_record(&r);
        assert!(!n.contr && n.upd.is_none());
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].field, Dimension::Contr);
    }

    #[test]
    fn cascade_forces_na_date() {
        let mut r = rec();
        r.upd = NaiveDate::from_ymd_opt(2023, 3, 1);
        let (n, w) = normalize_record(&r);
        assert_eq!(n.upd, None);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].field, Dimension::Upd);
    }

    #[test]
    fn policy_records_untouched() {
        let mut r = rec();
        r.ispol = true;
        r.port = true;
        r.upd = NaiveDate::from_ymd_opt(2023, 3, 1);
        let (n, w) = normalize_record(&r);
        assert_eq!(n, r);
        assert!(w.is_empty());
    }

    #[test]
    fn upd_serde() {
        let mut r = rec();
        r.ispol = true;
        r.upd = NaiveDate::from_ymd_opt(2023, 6, 15);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["upd"], "15/06/2023");
        let back: AnnotationRecord = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
        let na = serde_json::to_value(rec()).unwrap();
        assert_eq!(na["upd"], "NA");
    }

    fn arb_record() -> impl Strategy<Value = AnnotationRecord> {
        (proptest::collection::vec(any::<bool>(), 8), proptest::option::of((2000i32..2030, 1u32..=12, 1u32..=28)))
            .prop_map(|(flags, date)| {
                let mut r = rec();
                for (d, v) in Dimension::BOOLEAN.iter().zip(flags) {
                    r.set_flag(*d, v);
                }
                r.upd = date.and_then(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d));
                r
            })
    }

    proptest! {
        #[test]
        fn normalize_idempotent_and_consistent(r in arb_record()) {
            let (once, _) = normalize_record(&r);
            let (twice, w2) = normalize_record(&once);
            prop_assert!(once.is_consistent());
            prop_assert_eq!(&once, &twice);
            prop_assert!(w2.is_empty());
        }
    }
}
