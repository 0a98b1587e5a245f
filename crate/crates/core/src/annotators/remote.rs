//! Structured-output chat-completion backend.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::anonymize::{Anonymizer, PatternAnonymizer};
use super::cache::{cache_key, CacheEntry, ResponseCache};
use super::http::{self, HttpFailure, RetryPolicy};
use super::prompt::{build_prompt, response_schema, schema_violations, PromptBundle};
use super::AnnotatorError;
use crate::codebook::{normalize_record, parse_date, AnnotationRecord, Codebook, Dimension, Source};
use crate::corpus::{Language, PolicyDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub model: String,
    /// Defaults to `model` when empty.
    pub backend_id: String,
    pub temperature: Option<f64>,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    pub audit_log: Option<PathBuf>,
    /// Adds the exploratory `org` field to the schema.
    pub discovery: bool,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            api_key_env: None,
            model: "gpt-5".into(),
            backend_id: String::new(),
            temperature: Some(0.0),
            timeout_secs: 120,
            retry: RetryPolicy::default(),
            cache_dir: None,
            audit_log: None,
            discovery: false,
        }
    }
}

impl RemoteConfig {
    pub fn backend_id(&self) -> &str {
        if self.backend_id.is_empty() {
            &self.model
        } else {
            &self.backend_id
        }
    }
}

#[derive(Serialize)]
struct AuditLine<'a> {
    doc_id: &'a str,
    backend_id: &'a str,
    cache_key: &'a str,
    attempt: u32,
    stored_at: &'a str,
    outcome: &'a str,
    raw: &'a str,
}

pub struct RemoteAnnotator {
    config: RemoteConfig,
    codebook: Codebook,
    anonymizer: Box<dyn Anonymizer>,
    agent: ureq::Agent,
    cache: Arc<ResponseCache>,
    audit: Option<Mutex<std::fs::File>>,
}

impl RemoteAnnotator {
    pub fn new(config: RemoteConfig, codebook: Codebook) -> Result<Self, AnnotatorError> {
        let cache = match &config.cache_dir {
            Some(dir) => ResponseCache::on_disk(dir)?,
            None => ResponseCache::in_memory(),
        };
        Self::with_cache(config, codebook, Arc::new(cache))
    }

    pub fn with_cache(
        config: RemoteConfig,
        codebook: Codebook,
        cache: Arc<ResponseCache>,
    ) -> Result<Self, AnnotatorError> {
        let audit = match &config.audit_log {
            Some(path) => {
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path)?))
            }
            None => None,
        };
        Ok(Self {
            agent: http::agent(Duration::from_secs(config.timeout_secs)),
            config,
            codebook,
            anonymizer: Box::new(PatternAnonymizer),
            cache,
            audit,
        })
    }

    pub fn with_anonymizer(mut self, anonymizer: Box<dyn Anonymizer>) -> Self {
        self.anonymizer = anonymizer;
        self
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    pub fn prompt(&self, policy: &PolicyDocument) -> Result<PromptBundle, AnnotatorError> {
        build_prompt(&self.codebook, policy, self.anonymizer.as_ref(), self.config.discovery)
    }

    fn request_body(&self, bundle: &PromptBundle) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": bundle.messages(),
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": "codebook_annotation",
                    "strict": true,
                    "schema": response_schema(self.config.discovery),
                }
            }
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        body
    }

    fn audit(&self, line: AuditLine<'_>) -> Result<(), AnnotatorError> {
        if let Some(file) = &self.audit {
            let mut f = file.lock().expect("audit lock poisoned");
            serde_json::to_writer(&mut *f, &line)?;
            f.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Sends one request; returns the structured content string.
    fn fetch_once(&self, body: &Value) -> Result<String, HttpFailure> {
        let token = self.config.api_key_env.as_deref().and_then(|var| std::env::var(var).ok());
        let raw = http::post_json(&self.agent, &self.config.endpoint, token.as_deref(), body)?;
        Ok(extract_content(&raw).unwrap_or(raw))
    }

    /// Annotates one policy, consulting the cache before any network call.
    pub fn annotate(&self, policy: &PolicyDocument) -> Result<AnnotationRecord, AnnotatorError> {
        if policy.language == Language::Unknown {
            return Err(AnnotatorError::UnsupportedLanguage(policy.doc_id.clone()));
        }
        let bundle = self.prompt(policy)?;
        let bundle_json = serde_json::to_string(&bundle)?;
        let key = cache_key(&[self.config.backend_id(), &bundle.schema_version, &bundle_json]);

        let lock = self.cache.key_lock(&key);
        let _guard = lock.lock().expect("key lock poisoned");
        if let Some(entry) = self.cache.get(&key)? {
            return self.to_record(policy, &entry);
        }

        let body = self.request_body(&bundle);
        let max_attempts = self.config.retry.max_attempts.max(1);
        let mut last: Option<AnnotatorError> = None;
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                std::thread::sleep(self.config.retry.delay(attempt - 1));
            }
            match self.fetch_once(&body) {
                Ok(content) => {
                    let violations = match serde_json::from_str::<Value>(&content) {
                        Ok(v) => schema_violations(&v, self.config.discovery),
                        Err(e) => vec![format!("response is not JSON: {e}")],
                    };
                    let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
                    let outcome = if violations.is_empty() { "ok" } else { "schema_violation" };
                    self.audit(AuditLine {
                        doc_id: &policy.doc_id,
                        backend_id: self.config.backend_id(),
                        cache_key: &key,
                        attempt,
                        stored_at: &now,
                        outcome,
                        raw: &content,
                    })?;
                    if violations.is_empty() {
                        let entry = self.cache.put(CacheEntry { key: key.clone(), value: content, stored_at: now })?;
                        return self.to_record(policy, &entry);
                    }
                    log::warn!("{}: schema violation on attempt {attempt}: {violations:?}", policy.doc_id);
                    last = Some(AnnotatorError::SchemaViolation {
                        doc_id: policy.doc_id.clone(),
                        violations,
                        raw: content,
                    });
                }
                Err(failure) if failure.is_length_rejection() => {
                    return Err(AnnotatorError::AnnotationFailed {
                        doc_id: policy.doc_id.clone(),
                        reason: format!("backend rejected input length: {failure:?}"),
                    });
                }
                Err(failure) if failure.is_retryable() => {
                    log::warn!("{}: attempt {attempt} failed: {failure:?}", policy.doc_id);
                    last = Some(match failure {
                        HttpFailure::Timeout => AnnotatorError::Timeout(policy.doc_id.clone()),
                        other => AnnotatorError::Transport(format!("{other:?}")),
                    });
                }
                Err(failure) => return Err(AnnotatorError::Transport(format!("{failure:?}"))),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn to_record(&self, policy: &PolicyDocument, entry: &CacheEntry) -> Result<AnnotationRecord, AnnotatorError> {
        let value: Value = serde_json::from_str(&entry.value)?;
        let mut record = AnnotationRecord::empty(&policy.doc_id, Source::RemoteLlm, self.config.backend_id());
        for dim in Dimension::BOOLEAN {
            record.set_flag(dim, value[dim.code()].as_bool().unwrap_or(false));
        }
        record.upd = value["upd"].as_str().and_then(parse_date);
        if self.config.discovery {
            record.org = value["org"].as_str().map(str::to_string);
        }
        record.created_at = entry.stored_at.clone();
        record.raw_payload = entry.value.clone();
        let (normalized, warnings) = normalize_record(&record);
        for w in warnings {
            log::info!("{}: {}", w.doc_id, w.message);
        }
        Ok(normalized)
    }
}

/// Pulls `choices[0].message.content` out of a chat-completions response.
fn extract_content(raw: &str) -> Option<String> {
    let v: Value = serde_json::from_str(raw).ok()?;
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let raw = r#"{"choices":[{"message":{"role":"assistant","content":"{\"a\":1}"}}]}"#;
        assert_eq!(extract_content(raw).as_deref(), Some(r#"{"a":1}"#));
        assert_eq!(extract_content("{}"), None);
    }

    #[test]
    fn backend_id_defaults_to_model() {
        let c = RemoteConfig::default();
        assert_eq!(c.backend_id(), "gpt-5");
        let c = RemoteConfig { backend_id: "x".into(), ..c };
        assert_eq!(c.backend_id(), "x");
    }
}
