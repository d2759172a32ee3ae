use std::sync::{Condvar, Mutex};
use std::time::Duration;

use log::warn;
use serde::Deserialize;
use serde_json::json;

use super::{CompletionRequest, Provider, ProviderError};

pub const API_KEY_ENV: &str = "EVOGATE_API_KEY";
pub const BASE_URL_ENV: &str = "EVOGATE_BASE_URL";
const DEFAULT_BASE_URL: &str = "https://api.openai.com";

/// Counting semaphore bounding in-flight requests.
struct RequestCap {
    available: Mutex<usize>,
    freed: Condvar,
}

impl RequestCap {
    fn new(limit: usize) -> Self {
        RequestCap {
            available: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> CapGuard<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.freed.wait(available).unwrap();
        }
        *available -= 1;
        CapGuard { cap: self }
    }
}

struct CapGuard<'a> {
    cap: &'a RequestCap,
}

impl Drop for CapGuard<'_> {
    fn drop(&mut self) {
        *self.cap.available.lock().unwrap() += 1;
        self.cap.freed.notify_one();
    }
}

/// Client for an OpenAI-compatible chat-completions endpoint. Transient
/// failures are retried with exponential backoff; 4xx responses other than
/// 429 abort immediately.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
    max_attempts: u32,
    backoff_base: Duration,
    cap: RequestCap,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        let base_url = base_url.into();
        HttpProvider {
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(300))
                .build()
                .expect("reqwest client construction cannot fail with static options"),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            max_attempts: 4,
            backoff_base: Duration::from_millis(500),
            cap: RequestCap::new(4),
        }
    }

    /// Credentials from `EVOGATE_API_KEY`; base URL from `EVOGATE_BASE_URL`
    /// (defaults to the public OpenAI endpoint).
    pub fn from_env() -> Result<Self, ProviderError> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| ProviderError::MissingCredentials(API_KEY_ENV))?;
        let base_url =
            std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Ok(Self::new(base_url, api_key))
    }

    pub fn with_max_attempts(mut self, attempts: u32) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }

    pub fn with_concurrency_cap(mut self, limit: usize) -> Self {
        self.cap = RequestCap::new(limit);
        self
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<String, AttemptError> {
        let url = format!("{}/v1/chat/completions", self.base_url);
        let body = json!({
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = response.status();
        if status.is_client_error() && status.as_u16() != 429 {
            let message = response.text().unwrap_or_default();
            return Err(AttemptError::Fatal { status: status.as_u16(), message });
        }
        if !status.is_success() {
            let message = response.text().unwrap_or_default();
            return Err(AttemptError::Transient(format!("status {status}: {message}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| AttemptError::Transient(format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| AttemptError::Transient("response carried no choices".to_string()))
    }
}

enum AttemptError {
    Transient(String),
    Fatal { status: u16, message: String },
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl Provider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let _slot = self.cap.acquire();
        let mut last_message = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(AttemptError::Fatal { status, message }) => {
                    return Err(ProviderError::Rejected { status, message });
                }
                Err(AttemptError::Transient(message)) => {
                    warn!("completion attempt {} failed: {message}", attempt + 1);
                    last_message = message;
                }
            }
        }
        Err(ProviderError::Exhausted {
            attempts: self.max_attempts,
            message: last_message,
        })
    }
}
