//! OpenAI-compatible `/chat/completions` client with capped exponential
//! backoff on network failures, 429s and 5xx responses.

use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, ChatRequest, ChatResponse, GatewayError};
use crate::cost::TokenUsage;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const MAX_TRIES: u32 = 5;

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL up to and including the API version, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_tries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            timeout: DEFAULT_TIMEOUT,
            max_tries: MAX_TRIES,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(16),
        }
    }

    /// Reads the base URL and key from the named environment variables.
    /// Secrets never live in config files, only the variable names do.
    pub fn from_env(base_url_env: &str, api_key_env: &str, model: impl Into<String>) -> Result<Self, GatewayError> {
        let base_url = std::env::var(base_url_env)
            .map_err(|_| GatewayError::Config(format!("environment variable {base_url_env} is not set")))?;
        let api_key = std::env::var(api_key_env)
            .map_err(|_| GatewayError::Config(format!("environment variable {api_key_env} is not set")))?;
        let mut config = Self::new(base_url, model);
        config.api_key = Some(api_key);
        Ok(config)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
    n: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    #[serde(default)]
    index: Option<u32>,
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

pub struct HttpBackend {
    config: HttpConfig,
    client: Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn send_once(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let body = WireRequest {
            model: &self.config.model,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_completion_tokens,
            n: request.n_samples,
        };
        let mut builder = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| GatewayError::Network(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| GatewayError::Network(e.to_string()))?;
        if status == StatusCode::TOO_MANY_REQUESTS {
            return Err(GatewayError::RateLimited(text));
        }
        if status.is_server_error() {
            return Err(GatewayError::Network(format!("status {status}: {text}")));
        }
        if !status.is_success() {
            return Err(GatewayError::Provider { status: status.as_u16(), body: text });
        }
        parse_response(&text)
    }
}

fn parse_response(text: &str) -> Result<ChatResponse, GatewayError> {
    let wire: WireResponse = serde_json::from_str(text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
    let usage = wire.usage.ok_or_else(|| GatewayError::Malformed("response has no usage block".into()))?;
    let mut choices = wire.choices;
    choices.sort_by_key(|c| c.index.unwrap_or(0));
    let completions = choices
        .into_iter()
        .map(|c| c.message.content.ok_or_else(|| GatewayError::Malformed("choice without content".into())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChatResponse { completions, usage: TokenUsage::new(usage.prompt_tokens, usage.completion_tokens) })
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut attempt = 0;
        loop {
            match self.send_once(request) {
                Err(e) if e.is_retryable() && attempt + 1 < self.config.max_tries => {
                    let wait = self.config.backoff(attempt);
                    log::warn!("chat completion failed ({e}); retrying in {wait:?}");
                    thread::sleep(wait);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
