//! Pattern-based identifier anonymization.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternClass {
    Email,
    Url,
    Iban,
    Phone,
}

impl PatternClass {
    /// Application order. Emails go before URLs so that `mailto:`-less
    /// addresses inside links are still caught.
    pub const ORDER: [PatternClass; 4] =
        [PatternClass::Email, PatternClass::Url, PatternClass::Iban, PatternClass::Phone];

    pub fn placeholder(self) -> &'static str {
        match self {
            PatternClass::Email => "[EMAIL]",
            PatternClass::Url => "[URL]",
            PatternClass::Iban => "[IBAN]",
            PatternClass::Phone => "[PHONE]",
        }
    }

    fn regex(self) -> &'static Regex {
        static RES: OnceLock<[Regex; 4]> = OnceLock::new();
        let all = RES.get_or_init(|| {
            [
                Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}").unwrap(),
                Regex::new(r#"(?i)\b(?:https?://|www\.)[^\s<>"'()\[\]]*[^\s<>"'()\[\].,;:!?]"#).unwrap(),
                Regex::new(r"\b[A-Z]{2}\d{2}(?: ?[A-Z0-9]{4}){3,7}(?: ?[A-Z0-9]{1,3})?\b").unwrap(),
                Regex::new(
                    r"(?:\+|\b00)\d{1,3}(?:[ \-]?\(0\))?(?:[ \-]?\d{1,4}){2,5}\b|\b0\d{1,3}(?:[ \-]\d{2,4}){2,4}\b",
                )
                .unwrap(),
            ]
        });
        &all[self as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub pattern_class: PatternClass,
    pub original_span_length: usize,
    pub placeholder: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymizedText {
    pub text: String,
    pub substitutions: Vec<Substitution>,
}

/// Replaces identifying spans with placeholders.
pub trait Anonymizer: Send + Sync {
    fn anonymize(&self, text: &str) -> AnonymizedText;
}

/// Regex anonymizer for e-mail addresses, URLs, IBANs and phone numbers.
#[derive(Debug, Clone, Copy, Default)]
pub struct PatternAnonymizer;

impl Anonymizer for PatternAnonymizer {
    fn anonymize(&self, text: &str) -> AnonymizedText {
        let mut current = text.to_string();
        let mut substitutions = Vec::new();
        for class in PatternClass::ORDER {
            let re = class.regex();
            if !re.is_match(&current) {
                continue;
            }
            let replaced = re.replace_all(&current, |caps: &regex::Captures<'_>| {
                substitutions.push(Substitution {
                    pattern_class: class,
                    original_span_length: caps[0].len(),
                    placeholder: class.placeholder().to_string(),
                });
                class.placeholder()
            });
            current = replaced.into_owned();
        }
        AnonymizedText { text: current, substitutions }
    }
}

pub fn anonymize(text: &str) -> AnonymizedText {
    PatternAnonymizer.anonymize(text)
}

/// True if any identifier pattern matches `text`.
pub fn contains_identifier(text: &str) -> bool {
    PatternClass::ORDER.iter().any(|c| c.regex().is_match(text))
}
