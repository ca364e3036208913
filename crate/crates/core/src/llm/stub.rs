//! Offline backends: a scripted stub and a request recorder.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendKind, ChatBackend, ChatRequest, LlmError, LlmParams};

/// Hex SHA-256 of a prompt's plain text; the stub script is keyed by it.
pub fn prompt_key(prompt_text: &str) -> String {
    hex::encode(Sha256::digest(prompt_text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StubScript {
    pub responses: BTreeMap<String, String>,
}

/// Answers from a script keyed by prompt hash. Unscripted prompts get the
/// prompt body back with its paragraphs run together.
#[derive(Debug, Clone, Default)]
pub struct StubBackend {
    pub script: StubScript,
}

impl StubBackend {
    pub fn new(script: StubScript) -> StubBackend {
        StubBackend { script }
    }

    pub fn from_json(doc: &str) -> Result<StubBackend, serde_json::Error> {
        Ok(StubBackend::new(serde_json::from_str(doc)?))
    }

    pub fn with_response(mut self, prompt_text: &str, response: &str) -> StubBackend {
        self.script
            .responses
            .insert(prompt_key(prompt_text), response.to_string());
        self
    }
}

impl ChatBackend for StubBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Stub
    }

    fn complete(&self, request: &ChatRequest, _params: &LlmParams) -> Result<String, LlmError> {
        let key = prompt_key(&request.prompt_text());
        if let Some(r) = self.script.responses.get(&key) {
            return Ok(r.clone());
        }
        let body: Vec<&str> = request
            .messages
            .iter()
            .filter(|m| m.role == "user")
            .flat_map(|m| m.content.split("\n\n"))
            .collect();
        Ok(body.join(" "))
    }
}

/// Wraps a backend and keeps the serialized payload of every request.
#[derive(Clone)]
pub struct RecordingBackend<B> {
    pub inner: B,
    recorded: Arc<Mutex<Vec<serde_json::Value>>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> RecordingBackend<B> {
        RecordingBackend {
            inner,
            recorded: Arc::default(),
        }
    }

    pub fn payloads(&self) -> Vec<serde_json::Value> {
        self.recorded.lock().expect("recorder lock").clone()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn kind(&self) -> BackendKind {
        self.inner.kind()
    }

    fn complete(&self, request: &ChatRequest, params: &LlmParams) -> Result<String, LlmError> {
        let payload = serde_json::to_value(request).map_err(|e| LlmError::Protocol(e.to_string()))?;
        self.recorded.lock().expect("recorder lock").push(payload);
        self.inner.complete(request, params)
    }
}
