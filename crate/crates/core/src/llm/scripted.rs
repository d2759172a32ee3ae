use std::collections::HashMap;
use std::sync::Mutex;

use super::{CompletionRequest, Provider, ProviderError};

/// What a [`ScriptedProvider`] answers with.
#[derive(Debug, Clone)]
pub enum Script {
    /// Responses served in order; with `cycle` the list wraps around instead
    /// of exhausting.
    Sequence { responses: Vec<String>, cycle: bool },
    /// Responses looked up by request fingerprint.
    Keyed(HashMap<String, String>),
}

#[derive(Debug, Default)]
struct State {
    cursor: usize,
    log: Vec<CompletionRequest>,
}

/// Deterministic canned provider for tests and offline fixtures: identical
/// call sequences always yield identical responses.
#[derive(Debug)]
pub struct ScriptedProvider {
    script: Script,
    state: Mutex<State>,
}

impl ScriptedProvider {
    pub fn sequence(responses: Vec<String>) -> Self {
        ScriptedProvider {
            script: Script::Sequence { responses, cycle: false },
            state: Mutex::new(State::default()),
        }
    }

    pub fn cycling(responses: Vec<String>) -> Self {
        ScriptedProvider {
            script: Script::Sequence { responses, cycle: true },
            state: Mutex::new(State::default()),
        }
    }

    pub fn keyed(responses: HashMap<String, String>) -> Self {
        ScriptedProvider {
            script: Script::Keyed(responses),
            state: Mutex::new(State::default()),
        }
    }

    pub fn call_count(&self) -> usize {
        self.state.lock().unwrap().log.len()
    }

    pub fn call_log(&self) -> Vec<CompletionRequest> {
        self.state.lock().unwrap().log.clone()
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let mut state = self.state.lock().unwrap();
        state.log.push(request.clone());
        match &self.script {
            Script::Sequence { responses, cycle } => {
                if responses.is_empty() {
                    return Err(ProviderError::ScriptExhausted { served: 0 });
                }
                let index = if *cycle {
                    state.cursor % responses.len()
                } else if state.cursor < responses.len() {
                    state.cursor
                } else {
                    return Err(ProviderError::ScriptExhausted { served: responses.len() });
                };
                state.cursor += 1;
                Ok(responses[index].clone())
            }
            Script::Keyed(map) => {
                let fingerprint = request
                    .fingerprint
                    .clone()
                    .unwrap_or_else(|| prompt_fingerprint(&request.prompt));
                map.get(&fingerprint)
                    .cloned()
                    .ok_or(ProviderError::MissingKey { fingerprint })
            }
        }
    }
}

/// Fallback key for requests that carry no template fingerprint.
pub fn prompt_fingerprint(prompt: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(prompt.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
