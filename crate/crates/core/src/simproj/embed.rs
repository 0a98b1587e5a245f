//! Remote embedding client with truncation, caching and retries.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{EmbeddingVector, SimprojError};
use crate::annotators::anonymize::{Anonymizer, PatternAnonymizer};
use crate::annotators::cache::{cache_key, CacheEntry, ResponseCache};
use crate::annotators::http::{self, HttpFailure, RetryPolicy};
use crate::corpus::PolicyDocument;

pub const DEFAULT_MAX_TOKENS: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub endpoint: String,
    pub api_key_env: Option<String>,
    pub model: String,
    /// Whitespace tokens kept from the start of each document.
    pub max_tokens: usize,
    /// Redact identifiers before sending text out. Off by default so the
    /// token limit applies to the original text.
    pub anonymize: bool,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/embeddings".into(),
            api_key_env: None,
            model: "text-embedding-3-large".into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            anonymize: false,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
            cache_dir: None,
        }
    }
}

/// Keeps the first `max_tokens` whitespace tokens, joined by single spaces.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> (String, usize) {
    let tokens: Vec<&str> = text.split_whitespace().take(max_tokens).collect();
    let n = tokens.len();
    (tokens.join(" "), n)
}

pub struct EmbeddingClient {
    config: EmbeddingConfig,
    agent: ureq::Agent,
    cache: Arc<ResponseCache>,
}

#[derive(Debug, Default)]
pub struct EmbedBatch {
    pub vectors: Vec<EmbeddingVector>,
    pub failures: Vec<(String, SimprojError)>,
}

impl EmbeddingClient {
    pub fn new(config: EmbeddingConfig) -> Result<Self, SimprojError> {
        let cache = match &config.cache_dir {
            Some(dir) => ResponseCache::on_disk(dir)?,
            None => ResponseCache::in_memory(),
        };
        Ok(Self::with_cache(config, Arc::new(cache)))
    }

    pub fn with_cache(config: EmbeddingConfig, cache: Arc<ResponseCache>) -> Self {
        log::info!("embedding truncation uses whitespace tokens, not the provider tokenizer");
        Self { agent: http::agent(Duration::from_secs(config.timeout_secs)), config, cache }
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    /// The exact text that would be sent for `doc`.
    pub fn payload_text(&self, doc: &PolicyDocument) -> (String, usize) {
        let text = if self.config.anonymize { PatternAnonymizer.anonymize(&doc.text).text } else { doc.text.clone() };
        truncate_tokens(&text, self.config.max_tokens)
    }

    pub fn embed(&self, doc: &PolicyDocument) -> Result<EmbeddingVector, SimprojError> {
        let (input, tokens) = self.payload_text(doc);
        if tokens == 0 {
            return Err(SimprojError::EmptyText(doc.doc_id.clone()));
        }
        let key = cache_key(&["embedding", &self.config.model, &input]);
        let lock = self.cache.key_lock(&key);
        let _guard = lock.lock().expect("key lock poisoned");
        let raw = match self.cache.get(&key)? {
            Some(entry) => entry.value,
            None => {
                let body = json!({ "model": self.config.model, "input": input });
                let raw = self.fetch(&body)?;
                parse_embedding(&raw)?;
                let stored_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
                self.cache.put(CacheEntry { key, value: raw, stored_at })?.value
            }
        };
        Ok(EmbeddingVector {
            doc_id: doc.doc_id.clone(),
            model_id: self.config.model.clone(),
            truncated_to: tokens,
            values: parse_embedding(&raw)?,
        })
    }

    fn fetch(&self, body: &Value) -> Result<String, SimprojError> {
        let token = self.config.api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
        let attempts = self.config.retry.max_attempts.max(1);
        let mut last = None;
        for attempt in 1..=attempts {
            if attempt > 1 {
                std::thread::sleep(self.config.retry.delay(attempt - 1));
            }
            match http::post_json(&self.agent, &self.config.endpoint, token.as_deref(), body) {
                Ok(raw) => return Ok(raw),
                Err(f) if f.is_retryable() => last = Some(f),
                Err(f) => return Err(failure(f)),
            }
        }
        Err(failure(last.expect("at least one attempt")))
    }

    /// Embeds every document with at most `width` requests in flight;
    /// failures are collected per document and do not stop the batch.
    pub fn embed_batch(&self, docs: &[&PolicyDocument], width: usize) -> EmbedBatch {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(width.max(1)).build().expect("thread pool");
        let results: Vec<_> = pool.install(|| docs.par_iter().map(|d| (d.doc_id.clone(), self.embed(d))).collect());
        let mut batch = EmbedBatch::default();
        for (id, r) in results {
            match r {
                Ok(v) => batch.vectors.push(v),
                Err(e) => batch.failures.push((id, e)),
            }
        }
        batch.vectors.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        batch.failures.sort_by(|a, b| a.0.cmp(&b.0));
        batch
    }
}

fn failure(f: HttpFailure) -> SimprojError {
    match f {
        HttpFailure::Timeout => SimprojError::Transport("request timed out".into()),
        HttpFailure::Status { code, body } => SimprojError::Transport(format!("status {code}: {body}")),
        HttpFailure::Transport(m) => SimprojError::Transport(m),
    }
}

fn parse_embedding(raw: &str) -> Result<Vec<f64>, SimprojError> {
    let v: Value = serde_json::from_str(raw)?;
    let values: Vec<f64> = v["data"][0]["embedding"]
        .as_array()
        .ok_or_else(|| SimprojError::BadResponse("missing data[0].embedding".into()))?
        .iter()
        .map(|x| x.as_f64().filter(|f| f.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| SimprojError::BadResponse("non-finite embedding entry".into()))?;
    if values.is_empty() {
        return Err(SimprojError::BadResponse("empty embedding".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_counts_whitespace_tokens() {
        let text = (0..10_000).map(|i| format!("w{i}")).collect::<Vec<_>>().join("\n ");
        let (out, n) = truncate_tokens(&text, DEFAULT_MAX_TOKENS);
        assert_eq!(n, 8192);
        assert_eq!(out.split(' ').count(), 8192);
        assert!(out.ends_with("w8191"));
        assert_eq!(truncate_tokens("  a  b ", 10), ("a b".to_string(), 2));
    }

    #[test]
    fn parses_responses() {
        assert_eq!(parse_embedding(r#"{"data":[{"embedding":[0.5,-1]}]}"#).unwrap(), vec![0.5, -1.0]);
        assert!(parse_embedding(r#"{"data":[]}"#).is_err());
        assert!(parse_embedding(r#"{"data":[{"embedding":[]}]}"#).is_err());
    }
}
