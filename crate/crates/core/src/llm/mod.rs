//! Chat-completion backends, summary generation and grounding checks.

mod grounding;
mod remote;
mod stub;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::narrative::PromptDoc;

pub use grounding::{extract_claims, verify_grounding, Claim, ClaimKind, GroundingReport, Verdict};
pub use remote::RemoteBackend;
pub use stub::{prompt_key, RecordingBackend, StubBackend, StubScript};

pub const DEFAULT_TEMPERATURE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("authentication failed (status {0})")]
    AuthFailure(u16),
    #[error("rate limited after {0} attempts")]
    RateLimited(u32),
    #[error("completion was empty")]
    EmptyCompletion,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
}

pub trait TokenEstimator {
    fn estimate(&self, texts: &[String]) -> usize;
}

/// One token per four characters, rounded up over the whole list.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharsPerToken;

impl TokenEstimator for CharsPerToken {
    fn estimate(&self, texts: &[String]) -> usize {
        texts.iter().map(|t| t.chars().count()).sum::<usize>().div_ceil(4)
    }
}

pub fn estimate_tokens(estimator: &dyn TokenEstimator, texts: &[String]) -> usize {
    estimator.estimate(texts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LlmParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub timeout_secs: u64,
    pub base_url: String,
    /// Name of the environment variable the key was read from.
    pub api_key_env: String,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl LlmParams {
    pub fn new(max_tokens: usize) -> LlmParams {
        LlmParams {
            model: "gpt-3.5-turbo".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens,
            timeout_secs: 60,
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "LLM_API_KEY".into(),
            api_key: None,
        }
    }

    /// Defaults overridden by `LLM_BASE_URL`, `LLM_API_KEY`, `LLM_MODEL` and
    /// `LLM_TEMPERATURE`.
    pub fn from_env(max_tokens: usize) -> Result<LlmParams, LlmError> {
        Self::from_lookup(max_tokens, |k| std::env::var(k).ok())
    }

    pub fn from_lookup(max_tokens: usize, get: impl Fn(&str) -> Option<String>) -> Result<LlmParams, LlmError> {
        let mut p = LlmParams::new(max_tokens);
        if let Some(url) = get("LLM_BASE_URL") {
            p.base_url = url;
        }
        if let Some(model) = get("LLM_MODEL") {
            p.model = model;
        }
        if let Some(t) = get("LLM_TEMPERATURE") {
            p.temperature = t
                .trim()
                .parse()
                .map_err(|_| LlmError::InvalidParams(format!("LLM_TEMPERATURE '{t}' is not a number")))?;
        }
        p.api_key = get("LLM_API_KEY");
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidParams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens < 1 {
            return Err(LlmError::InvalidParams("maxTokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    Remote,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// The OpenAI-compatible request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl ChatRequest {
    pub fn for_prompt(prompt: &PromptDoc, params: &LlmParams) -> ChatRequest {
        ChatRequest {
            model: params.model.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: prompt.instruction.clone(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: prompt.body(),
                },
            ],
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        }
    }

    /// Instruction and body as in the plain-text prompt export.
    pub fn prompt_text(&self) -> String {
        let part = |role: &str| {
            self.messages
                .iter()
                .filter(|m| m.role == role)
                .map(|m| m.content.as_str())
                .collect::<Vec<_>>()
                .join("\n\n")
        };
        format!("{}\n\n{}", part("system"), part("user"))
    }
}

pub trait ChatBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn complete(&self, request: &ChatRequest, params: &LlmParams) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    /// Upper bound on the total time spent waiting between attempts.
    pub max_total_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_total_delay: Duration::from_secs(4),
        }
    }
}

impl RetryPolicy {
    pub fn immediate() -> RetryPolicy {
        RetryPolicy {
            base_delay: Duration::ZERO,
            max_total_delay: Duration::ZERO,
            ..Default::default()
        }
    }

    /// Wait before attempt `n + 1` after `n` failures, doubling each time
    /// and cut so the running total stays under the ceiling.
    pub fn delay_after(&self, failures: u32, waited: Duration) -> Duration {
        let d = self.base_delay.saturating_mul(1 << failures.saturating_sub(1).min(16));
        d.min(self.max_total_delay.saturating_sub(waited))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryResult {
    pub summary_text: String,
    pub prompt_used: String,
    pub params: LlmParams,
    pub backend: BackendKind,
    pub latency_ms: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Live,
    /// Build the request but do not send it.
    DryRun,
}

/// Sends one chat completion for `prompt`, retrying only when rate limited.
pub fn generate_summary(
    prompt: &PromptDoc,
    params: &LlmParams,
    backend: &dyn ChatBackend,
    mode: RunMode,
    retry: RetryPolicy,
) -> Result<SummaryResult, LlmError> {
    params.validate()?;
    let request = ChatRequest::for_prompt(prompt, params);
    let prompt_used = prompt.text();
    if mode == RunMode::DryRun {
        return Ok(SummaryResult {
            summary_text: String::new(),
            prompt_used,
            params: params.clone(),
            backend: backend.kind(),
            latency_ms: 0,
            attempts: 0,
        });
    }
    let started = Instant::now();
    let mut waited = Duration::ZERO;
    let max_attempts = retry.max_attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        match backend.complete(&request, params) {
            Ok(text) if text.trim().is_empty() => return Err(LlmError::EmptyCompletion),
            Ok(text) => {
                return Ok(SummaryResult {
                    summary_text: text.trim().to_string(),
                    prompt_used,
                    params: params.clone(),
                    backend: backend.kind(),
                    latency_ms: started.elapsed().as_millis() as u64,
                    attempts: attempt,
                })
            }
            Err(LlmError::RateLimited(_)) if attempt < max_attempts => {
                let d = retry.delay_after(attempt, waited);
                std::thread::sleep(d);
                waited += d;
            }
            Err(LlmError::RateLimited(_)) => return Err(LlmError::RateLimited(attempt)),
            Err(e) => return Err(e),
        }
    }
}
