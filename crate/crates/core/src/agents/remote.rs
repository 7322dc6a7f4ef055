//! Remote chat-completions backend.
//!
//! Speaks the ubiquitous chat-completions JSON shape: POST a `model`,
//! `messages`, `temperature`, and `max_tokens`; read back
//! `choices[0].message.content`. The bearer credential comes from the
//! environment variable named by [`RemoteSpec::credential_env`] — never
//! from the config file.
//! Transient failures (transport errors, 408, 429, 5xx) retry with
//! exponential backoff; requests sharing an endpoint and credential are
//! paced through a common [`RateGate`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex as StdMutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::time::Instant;

use super::{AgentError, Conversation, Message};

fn default_temperature() -> f64 {
    0.7
}

fn default_max_output_tokens() -> u32 {
    10
}

fn default_retry_limit() -> u32 {
    3
}

fn default_retry_backoff_seconds() -> f64 {
    1.0
}

/// Connection settings for one remote model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSpec {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    /// Model identifier sent in the request body.
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Token cap sent with rating requests.
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    /// Name of the environment variable holding the bearer credential.
    pub credential_env: String,
    /// Total attempts per request, including the first.
    #[serde(default = "default_retry_limit")]
    pub retry_limit: u32,
    /// Backoff before attempt k+1 is `retry_backoff_seconds * 2^(k-1)`.
    #[serde(default = "default_retry_backoff_seconds")]
    pub retry_backoff_seconds: f64,
    /// Optional request pacing shared across the endpoint + credential.
    #[serde(default)]
    pub requests_per_second: Option<f64>,
}

/// Serializes concurrent requests so an endpoint sees at most
/// `requests_per_second` of them. The lock is held across the sleep, so
/// waiting callers queue rather than stampede when it releases.
#[derive(Debug)]
pub struct RateGate {
    min_interval: Duration,
    last: tokio::sync::Mutex<Option<Instant>>,
}

impl RateGate {
    pub fn new(requests_per_second: Option<f64>) -> Self {
        let min_interval = match requests_per_second {
            Some(rps) if rps > 0.0 && rps.is_finite() => Duration::from_secs_f64(1.0 / rps),
            _ => Duration::ZERO,
        };
        RateGate {
            min_interval,
            last: tokio::sync::Mutex::new(None),
        }
    }

    pub async fn pace(&self) {
        if self.min_interval.is_zero() {
            return;
        }
        let mut last = self.last.lock().await;
        if let Some(prev) = *last {
            let due = prev + self.min_interval;
            let now = Instant::now();
            if due > now {
                tokio::time::sleep(due - now).await;
            }
        }
        *last = Some(Instant::now());
    }
}

/// Gates shared across one run, keyed by (endpoint, credential variable).
/// Two specs with the same key share pacing; the first spec's
/// `requests_per_second` wins for the shared gate.
pub type GateMap = StdMutex<HashMap<(String, String), Arc<RateGate>>>;

pub fn new_gate_map() -> GateMap {
    StdMutex::new(HashMap::new())
}

pub fn gate_for(gates: &GateMap, spec: &RemoteSpec) -> Arc<RateGate> {
    let mut map = gates.lock().expect("gate map poisoned");
    map.entry((spec.endpoint.clone(), spec.credential_env.clone()))
        .or_insert_with(|| Arc::new(RateGate::new(spec.requests_per_second)))
        .clone()
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    message: Option<WireMessage>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

fn snippet(body: &str) -> String {
    const LIMIT: usize = 200;
    if body.len() <= LIMIT {
        body.to_string()
    } else {
        let mut end = LIMIT;
        while !body.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &body[..end])
    }
}

/// A live connection to one remote model.
#[derive(Debug, Clone)]
pub struct RemoteAgent {
    spec: RemoteSpec,
    credential: String,
    http: reqwest::Client,
    gate: Arc<RateGate>,
}

impl RemoteAgent {
    /// Reads the credential from the environment. Fails fast when the
    /// variable is unset or empty so a misconfigured run aborts before
    /// any trial starts.
    pub fn new(
        spec: RemoteSpec,
        http: reqwest::Client,
        gate: Arc<RateGate>,
    ) -> Result<Self, AgentError> {
        let credential = std::env::var(&spec.credential_env)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| AgentError::MissingCredential {
                var: spec.credential_env.clone(),
            })?;
        Ok(RemoteAgent {
            spec,
            credential,
            http,
            gate,
        })
    }

    pub fn spec(&self) -> &RemoteSpec {
        &self.spec
    }

    pub async fn complete(
        &self,
        conversation: &Conversation,
        max_tokens: u32,
    ) -> Result<String, AgentError> {
        let request = ChatRequest {
            model: &self.spec.model,
            messages: conversation.messages(),
            temperature: self.spec.temperature,
            max_tokens,
        };
        let attempts = self.spec.retry_limit.max(1);
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            self.gate.pace().await;
            let sent = self
                .http
                .post(&self.spec.endpoint)
                .bearer_auth(&self.credential)
                .json(&request)
                .send()
                .await;
            match sent {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let body: ChatResponse = response
                            .json()
                            .await
                            .map_err(|e| AgentError::MalformedReply {
                                detail: e.to_string(),
                            })?;
                        return body
                            .choices
                            .into_iter()
                            .next()
                            .and_then(|c| c.message)
                            .and_then(|m| m.content)
                            .ok_or(AgentError::MissingReply);
                    }
                    let code = status.as_u16();
                    let retryable = code == 408 || code == 429 || status.is_server_error();
                    if retryable && attempt < attempts {
                        log::warn!(
                            "{} returned {code}; retrying (attempt {attempt}/{attempts})",
                            self.spec.endpoint
                        );
                        self.backoff(attempt).await;
                        continue;
                    }
                    let body = response.text().await.unwrap_or_default();
                    return Err(AgentError::Status {
                        status: code,
                        body: snippet(&body),
                        attempts: attempt,
                    });
                }
                Err(err) => {
                    if attempt < attempts {
                        log::warn!(
                            "request to {} failed: {err}; retrying (attempt {attempt}/{attempts})",
                            self.spec.endpoint
                        );
                        self.backoff(attempt).await;
                        continue;
                    }
                    return Err(AgentError::Transport {
                        attempts: attempt,
                        detail: err.to_string(),
                    });
                }
            }
        }
    }

    async fn backoff(&self, failed_attempt: u32) {
        let exponent = failed_attempt.saturating_sub(1).min(16) as i32;
        let seconds = self.spec.retry_backoff_seconds.max(0.0) * f64::powi(2.0, exponent);
        if seconds > 0.0 {
            tokio::time::sleep(Duration::from_secs_f64(seconds)).await;
        }
    }
}
