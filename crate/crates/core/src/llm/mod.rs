pub mod http;
pub mod offline;
pub mod parse;
pub mod replay;
pub mod scripted;
pub mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One single-shot completion request. `fingerprint` is the stable key of
/// (template id, bindings) computed at render time; scripted and replay
/// providers match on it instead of raw prompt bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("http request failed after {attempts} attempts: {message}")]
    Exhausted { attempts: u32, message: String },
    #[error("provider rejected the request (status {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("scripted response sequence exhausted after {served} responses")]
    ScriptExhausted { served: usize },
    #[error("no scripted response for fingerprint {fingerprint}")]
    MissingKey { fingerprint: String },
    #[error("no replay fixture for fingerprint {fingerprint}")]
    MissingFixture { fingerprint: String },
    #[error("missing credentials: set {0}")]
    MissingCredentials(&'static str),
    #[error("fixture io: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture format: {0}")]
    Fixture(#[from] serde_json::Error),
}

/// Text-completion backend. Implementations use interior mutability where
/// they keep state (call logs, cursors) so one provider can serve a run.
pub trait Provider: Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}
