use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Connection settings for one chat-completion model. The API key is read
/// from the environment variable named in `api_key_env` at request time and
/// is never stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Base URL; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout", with = "secs")]
    pub request_timeout: Duration,
    /// First retry delay; doubles on every further attempt.
    #[serde(default = "default_backoff", with = "secs")]
    pub backoff: Duration,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
}

fn default_retries() -> u32 {
    3
}
fn default_timeout() -> Duration {
    Duration::from_secs(60)
}
fn default_backoff() -> Duration {
    Duration::from_millis(500)
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl ModelConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        ModelConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 0.0,
            max_retries: default_retries(),
            request_timeout: default_timeout(),
            backoff: default_backoff(),
            api_key_env: default_key_env(),
        }
    }

    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }

    /// Delay before retry number `attempt` (1-based), capped at 30 s.
    pub fn backoff_delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.backoff.saturating_mul(factor).min(Duration::from_secs(30))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("http status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("authentication rejected (http {code})")]
    Auth { code: u16 },
    #[error("request timed out")]
    Timeout,
    #[error("transport: {0}")]
    Io(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("offline mode: no cached response")]
    Offline,
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Status { code, .. } => *code == 408 || *code == 429 || *code >= 500,
            TransportError::Timeout | TransportError::Io(_) => true,
            TransportError::Auth { .. } | TransportError::Malformed(_) | TransportError::Offline => false,
        }
    }
}

/// A chat-completion backend: one user message in, assistant text out.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, config: &ModelConfig, prompt: &str) -> Result<String, TransportError>;
}

/// Blocking HTTP client for OpenAI-compatible `/chat/completions` endpoints.
#[derive(Debug, Default, Clone)]
pub struct HttpTransport;

impl HttpTransport {
    pub fn request_body(config: &ModelConfig, prompt: &str) -> Value {
        json!({
            "model": config.model,
            "temperature": config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
    }
}

/// Pull `choices[0].message.content` out of a completion response.
pub fn completion_text(body: &str) -> Result<String, TransportError> {
    let value: Value = serde_json::from_str(body).map_err(|e| TransportError::Malformed(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| TransportError::Malformed("missing choices[0].message.content".into()))
}

impl ChatTransport for HttpTransport {
    fn complete(&self, config: &ModelConfig, prompt: &str) -> Result<String, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/chat/completions", config.endpoint.trim_end_matches('/'));
        let body = Self::request_body(config, prompt).to_string();

        let mut request = agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = config.api_key() {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = request.send(body.as_str()).map_err(map_ureq)?;
        let code = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(map_ureq)?;
        match code {
            200..=299 => completion_text(&text),
            401 | 403 => Err(TransportError::Auth { code }),
            _ => Err(TransportError::Status { code, body: truncate(&text, 200) }),
        }
    }
}

fn map_ureq(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::StatusCode(code @ (401 | 403)) => TransportError::Auth { code },
        ureq::Error::StatusCode(code) => TransportError::Status { code, body: String::new() },
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
        other => TransportError::Io(other.to_string()),
    }
}

fn truncate(s: &str, max_chars: usize) -> String {
    match s.char_indices().nth(max_chars) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}

/// Refuses every request; pairs with a warm cache for guaranteed offline runs.
#[derive(Debug, Default, Clone)]
pub struct OfflineTransport;

impl ChatTransport for OfflineTransport {
    fn complete(&self, _config: &ModelConfig, _prompt: &str) -> Result<String, TransportError> {
        Err(TransportError::Offline)
    }
}
