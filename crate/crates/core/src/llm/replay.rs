use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::scripted::prompt_fingerprint;
use super::{CompletionRequest, Provider, ProviderError};

/// One recorded exchange, stored as a JSON-lines row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub fingerprint: String,
    pub request: CompletionRequest,
    pub response: String,
}

fn request_key(request: &CompletionRequest) -> String {
    request
        .fingerprint
        .clone()
        .unwrap_or_else(|| prompt_fingerprint(&request.prompt))
}

/// Wraps a live provider and appends every exchange to a fixture file, so a
/// paid run can later be replayed bit-identically.
pub struct RecordingProvider<P> {
    inner: P,
    sink: Mutex<File>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P, path: &Path) -> Result<Self, ProviderError> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingProvider { inner, sink: Mutex::new(sink) })
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let response = self.inner.complete(request)?;
        let fixture = Fixture {
            fingerprint: request_key(request),
            request: request.clone(),
            response: response.clone(),
        };
        let mut sink = self.sink.lock().unwrap();
        serde_json::to_writer(&mut *sink, &fixture)?;
        writeln!(sink)?;
        Ok(response)
    }
}

/// Serves previously recorded responses by request fingerprint; never
/// touches the network.
pub struct ReplayProvider {
    responses: HashMap<String, String>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let reader = BufReader::new(File::open(path)?);
        let mut responses = HashMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fixture: Fixture = serde_json::from_str(&line)?;
            responses.insert(fixture.fingerprint, fixture.response);
        }
        Ok(ReplayProvider { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let fingerprint = request_key(request);
        self.responses
            .get(&fingerprint)
            .cloned()
            .ok_or(ProviderError::MissingFixture { fingerprint })
    }
}
