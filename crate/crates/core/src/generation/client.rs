use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tokio::time::Instant;

use super::ModelSpec;
use crate::journal::RunJournal;
use crate::prompting::Message;

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("endpoint {url} failed after {attempts} attempt(s): {message}")]
    Endpoint {
        url: String,
        attempts: u32,
        status: Option<u16>,
        message: String,
    },
    #[error("unexpected response from {url}: {message}")]
    Protocol { url: String, message: String },
}

/// Exponential backoff: `base`, `2·base`, `4·base`, ... capped at `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub max: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base: Duration::from_millis(500),
            max: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.min(16)).unwrap_or(u32::MAX);
        self.base.saturating_mul(factor).min(self.max)
    }
}

fn is_transient(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error()
}

pub(crate) fn completions_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/chat/completions") {
        base.to_string()
    } else if base.ends_with("/v1") {
        format!("{base}/chat/completions")
    } else {
        format!("{base}/v1/chat/completions")
    }
}

/// OpenAI-format chat-completions client with retries, a per-endpoint
/// request spacing, and request/response journaling.
#[derive(Clone)]
pub struct ChatClient {
    http: reqwest::Client,
    retry: RetryPolicy,
    min_interval: Option<Duration>,
    next_slot: Arc<Mutex<HashMap<String, Instant>>>,
    journal: Option<Arc<RunJournal>>,
}

impl Default for ChatClient {
    fn default() -> Self {
        Self::new()
    }
}

impl ChatClient {
    pub fn new() -> Self {
        Self {
            http: reqwest::Client::new(),
            retry: RetryPolicy::default(),
            min_interval: None,
            next_slot: Arc::default(),
            journal: None,
        }
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Space requests to the same endpoint at least `interval` apart.
    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = Some(interval);
        self
    }

    pub fn with_journal(mut self, journal: Arc<RunJournal>) -> Self {
        self.journal = Some(journal);
        self
    }

    async fn wait_for_slot(&self, url: &str) {
        let Some(interval) = self.min_interval else {
            return;
        };
        let wait_until = {
            let mut slots = self.next_slot.lock().await;
            let now = Instant::now();
            let slot = slots.get(url).copied().unwrap_or(now).max(now);
            slots.insert(url.to_string(), slot + interval);
            slot
        };
        tokio::time::sleep_until(wait_until).await;
    }

    fn journal(&self, event: &str, payload: Value) {
        if let Some(j) = &self.journal {
            j.record(event, payload);
        }
    }

    /// POST the messages and return `choices[0].message.content`.
    pub async fn request_completion(
        &self,
        spec: &ModelSpec,
        messages: &[Message],
        attempt_id: &str,
    ) -> Result<String, GenerationError> {
        let url = completions_url(&spec.endpoint_url);
        let key = match &spec.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| GenerationError::MissingApiKey(var.clone()))?,
            ),
            None => None,
        };
        let body = json!({
            "model": spec.model,
            "temperature": spec.temperature,
            "messages": messages,
        });

        let mut tries = 0;
        loop {
            tries += 1;
            self.wait_for_slot(&url).await;
            self.journal(
                "request",
                json!({ "attempt": attempt_id, "url": url, "try": tries, "body": body }),
            );
            let mut req = self.http.post(&url).timeout(spec.timeout).json(&body);
            if let Some(key) = &key {
                req = req.bearer_auth(key);
            }

            let (status, failure) = match req.send().await {
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().await.unwrap_or_default();
                    self.journal(
                        "response",
                        json!({ "attempt": attempt_id, "status": status.as_u16(), "body": text }),
                    );
                    if status.is_success() {
                        return parse_reply(&url, &text);
                    }
                    if !is_transient(status) {
                        return Err(GenerationError::Endpoint {
                            url,
                            attempts: tries,
                            status: Some(status.as_u16()),
                            message: text,
                        });
                    }
                    (Some(status.as_u16()), format!("HTTP {status}: {text}"))
                }
                Err(e) => {
                    self.journal(
                        "transport_error",
                        json!({ "attempt": attempt_id, "error": e.to_string() }),
                    );
                    (None, e.to_string())
                }
            };

            if tries > spec.max_retries {
                return Err(GenerationError::Endpoint {
                    url,
                    attempts: tries,
                    status,
                    message: failure,
                });
            }
            tokio::time::sleep(self.retry.delay(tries - 1)).await;
        }
    }
}

fn parse_reply(url: &str, text: &str) -> Result<String, GenerationError> {
    let protocol = |message: String| GenerationError::Protocol {
        url: url.to_string(),
        message,
    };
    let value: Value =
        serde_json::from_str(text).map_err(|e| protocol(format!("body is not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| protocol("missing choices[0].message.content".to_string()))
}
