//! Chat-completion clients and the caching session wrapper.
//!
//! The HTTP client targets a generic OpenAI-style `/chat/completions`
//! endpoint; the adapter is confined to this file. Transient failures are
//! retried with exponential backoff; authentication failures are not.
//! Offline runs use [`OfflineClient`], which turns every cache miss into an
//! explicit error instead of a network call.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::Deserialize;

use super::cache::ResponseCache;
use super::LlmError;

/// A chat-completion backend able to answer one prompt.
pub trait LlmClient: Send + Sync {
    fn complete(&self, model: &str, prompt: &str) -> Result<String, LlmError>;
    fn name(&self) -> &str;
}

/// Retry schedule for transient failures.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(4),
        }
    }
}

impl RetryPolicy {
    fn delay_for(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    content: String,
}

/// Blocking client for an OpenAI-style chat-completion endpoint.
pub struct HttpLlmClient {
    endpoint: String,
    api_token: String,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

impl HttpLlmClient {
    /// `endpoint` is the base URL; `/chat/completions` is appended unless
    /// the URL already ends with it.
    pub fn new(endpoint: &str, api_token: &str, retry: RetryPolicy) -> Result<Self, LlmError> {
        let trimmed = endpoint.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| LlmError::Network(format!("http client: {e}")))?;
        Ok(Self {
            endpoint,
            api_token: api_token.to_string(),
            retry,
            client,
        })
    }

    fn attempt(&self, model: &str, prompt: &str) -> Result<String, AttemptError> {
        let body = serde_json::json!({
            "model": model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_token)
            .json(&body)
            .send()
            .map_err(|e| AttemptError::Retryable(format!("request failed: {e}")))?;

        let status = response.status();
        let text = response
            .text()
            .map_err(|e| AttemptError::Retryable(format!("response read failed: {e}")))?;

        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(AttemptError::Fatal(LlmError::Auth(format!(
                "endpoint returned {status}"
            ))));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(AttemptError::Retryable(format!(
                "endpoint returned {status}: {text}"
            )));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(LlmError::Http {
                status: status.as_u16(),
                body: text,
            }));
        }

        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| AttemptError::Fatal(LlmError::BadResponse(format!("{e}; body: {text}"))))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| AttemptError::Fatal(LlmError::BadResponse("no choices".into())))
    }
}

enum AttemptError {
    Retryable(String),
    Fatal(LlmError),
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, model: &str, prompt: &str) -> Result<String, LlmError> {
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts {
            match self.attempt(model, prompt) {
                Ok(text) => return Ok(text),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(detail)) => {
                    last = detail;
                    if attempt + 1 < self.retry.max_attempts {
                        std::thread::sleep(self.retry.delay_for(attempt));
                    }
                }
            }
        }
        Err(LlmError::Network(format!(
            "gave up after {} attempts: {last}",
            self.retry.max_attempts
        )))
    }

    fn name(&self) -> &str {
        "http"
    }
}

/// Offline client: every call is a fixture miss. Pair it with a warmed cache
/// so stored responses are served and anything else fails loudly.
#[derive(Debug, Default)]
pub struct OfflineClient;

impl LlmClient for OfflineClient {
    fn complete(&self, model: &str, prompt: &str) -> Result<String, LlmError> {
        let excerpt: String = prompt.chars().take(80).collect();
        Err(LlmError::FixtureMiss {
            model: model.to_string(),
            prompt_excerpt: excerpt,
        })
    }

    fn name(&self) -> &str {
        "offline"
    }
}

/// A response plus whether it came from the cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmResponse {
    pub text: String,
    pub from_cache: bool,
}

/// Cache-first wrapper around a client: the cache is consulted by content
/// hash of (model, prompt) and live responses are appended to it.
pub struct LlmSession {
    client: Box<dyn LlmClient>,
    model: String,
    cache: ResponseCache,
    live_calls: AtomicU64,
}

impl LlmSession {
    pub fn new(client: Box<dyn LlmClient>, model: &str, cache: ResponseCache) -> Self {
        Self {
            client,
            model: model.to_string(),
            cache,
            live_calls: AtomicU64::new(0),
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Number of queries that reached the underlying client.
    pub fn live_calls(&self) -> u64 {
        self.live_calls.load(Ordering::Relaxed)
    }

    pub fn query(&self, prompt: &str) -> Result<LlmResponse, LlmError> {
        if let Some(text) = self.cache.get(&self.model, prompt) {
            return Ok(LlmResponse {
                text,
                from_cache: true,
            });
        }
        self.live_calls.fetch_add(1, Ordering::Relaxed);
        let text = self.client.complete(&self.model, prompt)?;
        self.cache.put(&self.model, prompt, &text)?;
        Ok(LlmResponse {
            text,
            from_cache: false,
        })
    }
}
