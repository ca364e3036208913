//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use super::{BackendKind, ChatBackend, ChatRequest, LlmError, LlmParams};

pub struct RemoteBackend {
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(timeout: Duration) -> RemoteBackend {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { agent }
    }

    pub fn for_params(params: &LlmParams) -> RemoteBackend {
        RemoteBackend::new(Duration::from_secs(params.timeout_secs.max(1)))
    }
}

fn transport(e: ureq::Error) -> LlmError {
    match e {
        ureq::Error::Timeout(_) => LlmError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => LlmError::Timeout,
        other => LlmError::Transport(other.to_string()),
    }
}

impl ChatBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn complete(&self, request: &ChatRequest, params: &LlmParams) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", params.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(&url);
        if let Some(key) = &params.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(request).map_err(transport)?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::AuthFailure(status)),
            429 => return Err(LlmError::RateLimited(1)),
            _ => return Err(LlmError::Protocol(format!("status {status}"))),
        }
        let body: serde_json::Value = resp.body_mut().read_json().map_err(transport)?;
        let content = body
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| LlmError::Protocol("missing choices[0].message.content".into()))?;
        Ok(content.to_string())
    }
}
