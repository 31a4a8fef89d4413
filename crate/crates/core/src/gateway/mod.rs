//! Uniform chat-completion interface over an OpenAI-compatible HTTP client
//! and a deterministic mock.

pub mod http;
pub mod mock;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::TokenUsage;

pub use http::{HttpBackend, HttpConfig};
pub use mock::{configure_mock, AnswerKey, MockBackend, MockMode, MockScript};

/// Completion cap used when a strategy does not set one.
pub const DEFAULT_MAX_COMPLETION_TOKENS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// Why a strategy is calling the model. Carried for the mock and the
/// transcript; never sent over the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallPurpose {
    Answer,
    Propose,
    Evaluate,
    Reflect,
}

/// Identifies a call within a run: which sample, which trial, which call of
/// the attempt. The mock derives its random stream from this.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestMeta {
    pub sample_id: String,
    pub trial_index: u32,
    pub call_index: u32,
    pub purpose: CallPurpose,
}

impl RequestMeta {
    pub fn new(sample_id: impl Into<String>, trial_index: u32, call_index: u32, purpose: CallPurpose) -> Self {
        Self { sample_id: sample_id.into(), trial_index, call_index, purpose }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_completion_tokens: u32,
    pub n_samples: u32,
    pub meta: RequestMeta,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>, temperature: f64, meta: RequestMeta) -> Self {
        Self { messages, temperature, max_completion_tokens: DEFAULT_MAX_COMPLETION_TOKENS, n_samples: 1, meta }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let invalid = |m: &str| Err(GatewayError::InvalidRequest(m.to_string()));
        match self.messages.first() {
            None => return invalid("messages must not be empty"),
            Some(m) if m.role == Role::Assistant => return invalid("first message must be system or user"),
            _ => {}
        }
        if self.n_samples == 0 {
            return invalid("n_samples must be at least 1");
        }
        if self.max_completion_tokens == 0 {
            return invalid("max_completion_tokens must be at least 1");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return invalid("temperature must be within [0, 2]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub completions: Vec<String>,
    /// Aggregate usage reported by the provider for the whole call.
    pub usage: TokenUsage,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("provider error (status {status}): {body}")]
    Provider { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("script exhausted")]
    ScriptExhausted,
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Network(_) | GatewayError::RateLimited(_))
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

/// Running totals over every successful call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageTotals {
    pub calls: u64,
    pub usage: TokenUsage,
}

/// A backend plus a call meter. Every successful call is recorded before
/// `complete` returns.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    totals: Arc<Mutex<UsageTotals>>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self { backend, totals: Arc::new(Mutex::new(UsageTotals::default())) }
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let response = self.backend.complete(request)?;
        if response.completions.len() != request.n_samples as usize {
            return Err(GatewayError::Malformed(format!(
                "expected {} completions, got {}",
                request.n_samples,
                response.completions.len()
            )));
        }
        let mut totals = self.totals.lock().expect("usage meter poisoned");
        totals.calls += 1;
        totals.usage += response.usage;
        Ok(response)
    }

    pub fn totals(&self) -> UsageTotals {
        *self.totals.lock().expect("usage meter poisoned")
    }
}
