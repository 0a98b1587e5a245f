//! Character-trigram language identification over the four target languages.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::Language;

/// Default minimum posterior for a confident label.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.5;
/// Texts shorter than this (in characters, after trimming) are never labeled.
pub const DEFAULT_MIN_CHARS: usize = 40;

const TRAINING: [(Language, &str); 4] = [
    (Language::De, include_str!("../../data/langid/de.txt")),
    (Language::En, include_str!("../../data/langid/en.txt")),
    (Language::Fr, include_str!("../../data/langid/fr.txt")),
    (Language::It, include_str!("../../data/langid/it.txt")),
];

/// Smoothing mass added to every trigram count.
const SMOOTHING: f64 = 0.5;
/// Assumed trigram vocabulary size for the smoothing denominator.
const VOCABULARY: f64 = 30_000.0;
/// Share of a text's trigrams that must occur in the winning profile; text
/// in other scripts shares almost none and is left unlabeled.
const MIN_COVERAGE: f64 = 0.25;

/// Anything that can label a text with a language and a confidence.
pub trait LanguageIdentifier: Send + Sync {
    fn identify(&self, text: &str) -> (Language, f64);
}

struct Profile {
    language: Language,
    counts: HashMap<[char; 3], u32>,
    total: f64,
}

impl Profile {
    fn log_prob(&self, gram: &[char; 3]) -> f64 {
        let c = self.counts.get(gram).copied().unwrap_or(0) as f64;
        ((c + SMOOTHING) / (self.total + SMOOTHING * VOCABULARY)).ln()
    }
}

/// Naive-Bayes classifier over padded character trigrams.
///
/// Confidence is the posterior probability of the winning language under a
/// uniform prior.
pub struct TrigramIdentifier {
    profiles: &'static [Profile],
    min_confidence: f64,
    min_chars: usize,
}

fn normalize(text: &str) -> Vec<char> {
    let mut out = vec![' '];
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphabetic() {
            out.push(ch);
        } else if out.last() != Some(&' ') {
            out.push(' ');
        }
    }
    if out.last() != Some(&' ') {
        out.push(' ');
    }
    out
}

fn trigrams(text: &str) -> Vec<[char; 3]> {
    normalize(text).windows(3).filter(|w| w[1] != ' ').map(|w| [w[0], w[1], w[2]]).collect()
}

fn shared_profiles() -> &'static [Profile] {
    static PROFILES: OnceLock<Vec<Profile>> = OnceLock::new();
    PROFILES.get_or_init(|| {
        TRAINING
            .iter()
            .map(|(language, text)| {
                let mut counts = HashMap::new();
                let grams = trigrams(text);
                for g in &grams {
                    *counts.entry(*g).or_insert(0u32) += 1;
                }
                Profile { language: *language, counts, total: grams.len() as f64 }
            })
            .collect()
    })
}

impl TrigramIdentifier {
    pub fn new(min_confidence: f64, min_chars: usize) -> Self {
        Self { profiles: shared_profiles(), min_confidence, min_chars }
    }

    /// Posterior over the target languages, in `de, en, fr, it` order.
    pub fn posteriors(&self, text: &str) -> Vec<(Language, f64)> {
        let grams = trigrams(text);
        let scores: Vec<(Language, f64)> =
            self.profiles.iter().map(|p| (p.language, grams.iter().map(|g| p.log_prob(g)).sum::<f64>())).collect();
        let max = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = scores.iter().map(|(_, s)| (s - max).exp()).sum();
        scores.into_iter().map(|(l, s)| (l, (s - max).exp() / norm)).collect()
    }
}

impl Default for TrigramIdentifier {
    fn default() -> Self {
        Self::new(DEFAULT_MIN_CONFIDENCE, DEFAULT_MIN_CHARS)
    }
}

impl LanguageIdentifier for TrigramIdentifier {
    fn identify(&self, text: &str) -> (Language, f64) {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return (Language::Unknown, 0.0);
        }
        let posteriors = self.posteriors(trimmed);
        let (best, confidence) =
            posteriors.into_iter().fold((Language::Unknown, 0.0), |acc, (l, p)| if p > acc.1 { (l, p) } else { acc });
        let grams = trigrams(trimmed);
        let seen = self
            .profiles
            .iter()
            .find(|p| p.language == best)
            .map_or(0, |p| grams.iter().filter(|g| p.counts.contains_key(*g)).count());
        let coverage = seen as f64 / grams.len().max(1) as f64;
        if trimmed.chars().count() < self.min_chars || confidence < self.min_confidence || coverage < MIN_COVERAGE {
            (Language::Unknown, confidence)
        } else {
            (best, confidence)
        }
    }
}

/// Labels `text` with the default trigram identifier.
pub fn detect_language(text: &str) -> (Language, f64) {
    TrigramIdentifier::default().identify(text)
}
