//! Blocking JSON-over-HTTP calls with classified failures and backoff.

use std::io;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HttpFailure {
    Timeout,
    Transport(String),
    Status { code: u16, body: String },
}

impl HttpFailure {
    /// Transport problems, timeouts, 429 and 5xx are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            HttpFailure::Timeout | HttpFailure::Transport(_) => true,
            HttpFailure::Status { code, .. } => *code == 429 || *code >= 500,
        }
    }

    /// The backend refused the request because the input is too long.
    pub fn is_length_rejection(&self) -> bool {
        match self {
            HttpFailure::Status { code: 413, .. } => true,
            HttpFailure::Status { code: 400, body } => {
                let b = body.to_ascii_lowercase();
                b.contains("context_length") || b.contains("maximum context") || b.contains("too long")
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay_ms: 500, max_delay_ms: 10_000 }
    }
}

impl RetryPolicy {
    /// Exponential delay before attempt `attempt + 1` (1-based `attempt`),
    /// with the upper half jittered.
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = self.base_delay_ms.saturating_mul(1u64 << attempt.saturating_sub(1).min(20)).min(self.max_delay_ms);
        let half = exp / 2;
        let jitter = if half > 0 { rand::thread_rng().gen_range(0..=half) } else { 0 };
        Duration::from_millis(exp - half + jitter)
    }
}

fn is_timeout(err: &(dyn std::error::Error + 'static)) -> bool {
    let mut current: Option<&(dyn std::error::Error + 'static)> = Some(err);
    while let Some(e) = current {
        if let Some(ioe) = e.downcast_ref::<io::Error>() {
            if matches!(ioe.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        current = e.source();
    }
    false
}

pub fn agent(timeout: Duration) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(timeout).build()
}

/// POSTs `body` and returns the response body text.
pub fn post_json(agent: &ureq::Agent, url: &str, bearer: Option<&str>, body: &Value) -> Result<String, HttpFailure> {
    let mut req = agent.post(url).set("Content-Type", "application/json");
    if let Some(token) = bearer {
        req = req.set("Authorization", &format!("Bearer {token}"));
    }
    match req.send_string(&body.to_string()) {
        Ok(resp) => resp.into_string().map_err(|e| {
            if is_timeout(&e) {
                HttpFailure::Timeout
            } else {
                HttpFailure::Transport(e.to_string())
            }
        }),
        Err(ureq::Error::Status(code, resp)) => {
            Err(HttpFailure::Status { code, body: resp.into_string().unwrap_or_default() })
        }
        Err(ureq::Error::Transport(t)) => {
            if is_timeout(&t) {
                Err(HttpFailure::Timeout)
            } else {
                Err(HttpFailure::Transport(t.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_grows_and_caps() {
        let p = RetryPolicy { max_attempts: 5, base_delay_ms: 100, max_delay_ms: 300 };
        for _ in 0..20 {
            let d1 = p.delay(1).as_millis();
            assert!((50..=100).contains(&d1), "{d1}");
            let d2 = p.delay(2).as_millis();
            assert!((100..=200).contains(&d2), "{d2}");
            assert!(p.delay(10).as_millis() <= 300);
        }
    }

    #[test]
    fn classification() {
        assert!(HttpFailure::Timeout.is_retryable());
        assert!(HttpFailure::Status { code: 503, body: String::new() }.is_retryable());
        assert!(!HttpFailure::Status { code: 401, body: String::new() }.is_retryable());
        let long = HttpFailure::Status { code: 400, body: r#"{"error":{"code":"context_length_exceeded"}}"#.into() };
        assert!(long.is_length_rejection());
        assert!(!long.is_retryable());
    }
}
