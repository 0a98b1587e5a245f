//! Deterministic multilingual keyword annotator.

use std::collections::BTreeMap;

use crate::codebook::{
    extract_date_candidates, normalize_record, normalize_update_date, AnnotationRecord, Dimension, Source,
};
use crate::corpus::PolicyDocument;

pub const BASELINE_ID: &str = "keyword-baseline-v1";

const POLICY_TERMS: &[&str] = &[
    "datenschutzerklärung",
    "datenschutzerklaerung",
    "datenschutzhinweis",
    "datenschutzrichtlinie",
    "privacy policy",
    "privacy notice",
    "privacy statement",
    "data protection",
    "personenbezogene",
    "personendaten",
    "personal data",
    "politique de confidentialité",
    "protection des données",
    "données personnelles",
    "informativa sulla privacy",
    "protezione dei dati",
    "dati personali",
];

fn terms(dim: Dimension) -> &'static [&'static str] {
    match dim {
        Dimension::Contr => &[
            "verantwortliche",
            "verantwortlicher",
            "verantwortlich für die",
            "controller",
            "data controller",
            "responsable du traitement",
            "titolare del trattamento",
        ],
        Dimension::Purp => &["zweck", "purpose", "finalité", "finalità", "scopo"],
        Dimension::Rect => &[
            "auskunft",
            "berichtigung",
            "right of access",
            "right to access",
            "rectification",
            "droit d'accès",
            "droit d’accès",
            "diritto di accesso",
            "rettifica",
        ],
        Dimension::Forg => &[
            "löschung",
            "recht auf vergessenwerden",
            "erasure",
            "right to be forgotten",
            "right to deletion",
            "effacement",
            "droit à l'oubli",
            "cancellazione",
            "diritto all'oblio",
        ],
        Dimension::Port => {
            &["datenübertragbarkeit", "datenuebertragbarkeit", "data portability", "portabilité", "portabilità"]
        }
        Dimension::Comp => &[
            "beschwerde",
            "lodge a complaint",
            "supervisory authority",
            "réclamation",
            "autorité de contrôle",
            "reclamo",
            "autorità di controllo",
        ],
        Dimension::Hum => &[
            "automatisierte entscheidung",
            "automatisierten entscheidung",
            "automatisierte einzelentscheidung",
            "automatisierten einzelentscheidung",
            "automated decision",
            "automated individual decision",
            "décision automatisée",
            "décision individuelle automatisée",
            "decisione automatizzata",
            "decisioni automatizzate",
            "processo decisionale automatizzato",
        ],
        Dimension::Ispol => POLICY_TERMS,
        Dimension::Upd => &[],
    }
}

/// Annotates `policy` by keyword lookup on the lower-cased text.
///
/// `ispol` is set when a policy term or any obligation term occurs; the
/// update date is the most recent date mentioned anywhere in the text.
pub fn annotate_baseline(policy: &PolicyDocument) -> AnnotationRecord {
    let lower = policy.text.to_lowercase();
    let mut record = AnnotationRecord::empty(&policy.doc_id, Source::Baseline, BASELINE_ID);
    let mut hits: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for dim in Dimension::BOOLEAN {
        let found: Vec<&str> = terms(dim).iter().copied().filter(|t| lower.contains(t)).collect();
        record.set_flag(dim, !found.is_empty());
        if !found.is_empty() {
            hits.insert(dim.code(), found);
        }
    }
    if Dimension::OBLIGATIONS.iter().any(|d| record.flag(*d) == Some(true)) {
        record.ispol = true;
    }
    record.upd = normalize_update_date(&extract_date_candidates(&policy.text));
    record.created_at = format!("{}T00:00:00Z", policy.snapshot.capture_date);
    record.raw_payload = serde_json::to_string(&hits).expect("hits serialize");
    normalize_record(&record).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotators::prompt::tests::doc;

    #[test]
    fn portability_keyword() {
        let r = annotate_baseline(&doc("Sie haben das Recht auf Datenübertragbarkeit."));
        assert!(r.port);
        assert!(r.ispol);
    }

    #[test]
    fn empty_text_is_not_a_policy() {
        let r = annotate_baseline(&doc(""));
        assert!(!r.ispol);
        assert!(Dimension::OBLIGATIONS.iter().all(|d| r.flag(*d) == Some(false)));
        assert_eq!(r.upd, None);
    }

    #[test]
    fn complaint_keyword() {
        let r = annotate_baseline(&doc("You have the right to lodge a complaint with us."));
        assert!(r.comp);
    }

    #[test]
    fn picks_latest_date_and_is_deterministic() {
        let text = "Datenschutzerklärung. Stand: 1. März 2023, geändert am 15.06.2023.";
        let a = annotate_baseline(&doc(text));
        assert_eq!(a.upd, chrono::NaiveDate::from_ymd_opt(2023, 6, 15));
        assert_eq!(a, annotate_baseline(&doc(text)));
        assert_eq!(a.source, Source::Baseline);
        assert_eq!(a.created_at, "2023-08-01T00:00:00Z");
    }
}
