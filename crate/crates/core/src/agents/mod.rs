//! Agent backends and the conversation structure they complete.
//!
//! A trial talks to two agents. Each agent is either a remote
//! chat-completions model or a deterministic simulated rater; both sit
//! behind the same [`Agent`] interface so the protocol driver never
//! branches on the backend kind.

pub mod parse;
pub mod remote;
pub mod simulated;

pub use parse::{parse_rating, ParseError, ParseMode};
pub use remote::{gate_for, new_gate_map, GateMap, RateGate, RemoteAgent, RemoteSpec};
pub use simulated::{
    simulated_final, simulated_initial, DeferencePolicy, PolicyError, SimulatedAgent,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Review;

/// Token cap for acknowledgement turns, where a model may reply with a
/// short sentence rather than a bare number.
pub const ACK_MAX_TOKENS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ConversationError {
    #[error("a system message is only allowed as the first message")]
    SystemNotFirst,
    #[error("an assistant message must directly follow a user message")]
    AssistantWithoutPrompt,
}

/// An ordered chat transcript with turn-order checks.
///
/// User messages may appear at any point — the protocol delivers
/// context-only messages (the rating revelation) back to back with the
/// next prompt. Assistant messages must answer a user message, and a
/// system message can only open the conversation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Conversation {
    messages: Vec<Message>,
}

impl Conversation {
    pub fn new() -> Self {
        Conversation::default()
    }

    pub fn push_system(&mut self, content: impl Into<String>) -> Result<(), ConversationError> {
        if !self.messages.is_empty() {
            return Err(ConversationError::SystemNotFirst);
        }
        self.messages.push(Message {
            role: Role::System,
            content: content.into(),
        });
        Ok(())
    }

    pub fn push_user(&mut self, content: impl Into<String>) {
        self.messages.push(Message {
            role: Role::User,
            content: content.into(),
        });
    }

    pub fn push_assistant(&mut self, content: impl Into<String>) -> Result<(), ConversationError> {
        if self.messages.last().map(|m| m.role) != Some(Role::User) {
            return Err(ConversationError::AssistantWithoutPrompt);
        }
        self.messages.push(Message {
            role: Role::Assistant,
            content: content.into(),
        });
        Ok(())
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    /// The trailing user message awaiting completion, if any.
    pub fn pending_prompt(&self) -> Option<&str> {
        self.messages
            .last()
            .filter(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    /// The user message immediately before the pending prompt, when the
    /// two are adjacent — i.e. context delivered without a completion.
    pub fn context_before_prompt(&self) -> Option<&str> {
        let n = self.messages.len();
        if n < 2 {
            return None;
        }
        let (prev, last) = (&self.messages[n - 2], &self.messages[n - 1]);
        (last.role == Role::User && prev.role == Role::User).then_some(prev.content.as_str())
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("credential variable {var} is unset or empty")]
    MissingCredential { var: String },
    #[error("transport failure after {attempts} attempt(s): {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("endpoint returned HTTP {status} after {attempts} attempt(s): {body}")]
    Status {
        status: u16,
        body: String,
        attempts: u32,
    },
    #[error("could not read completion body: {detail}")]
    MalformedReply { detail: String },
    #[error("completion carried no message content")]
    MissingReply,
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// Which backend drives an agent slot, as written in config files.
///
/// The wire form is a tagged object: `{"kind": "remote", ...}` or
/// `{"kind": "simulated", ...}` with the variant's fields inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Remote(RemoteSpec),
    Simulated(DeferencePolicy),
}

impl BackendSpec {
    /// Short label journaled with each trial, e.g. `remote:gpt-x` or
    /// `simulated`.
    pub fn identifier(&self) -> String {
        match self {
            BackendSpec::Remote(spec) => format!("remote:{}", spec.model),
            BackendSpec::Simulated(_) => "simulated".to_string(),
        }
    }

    pub fn is_simulated(&self) -> bool {
        matches!(self, BackendSpec::Simulated(_))
    }

    /// Token cap for rating turns on this backend.
    pub fn rating_max_tokens(&self) -> u32 {
        match self {
            BackendSpec::Remote(spec) => spec.max_output_tokens,
            BackendSpec::Simulated(_) => ACK_MAX_TOKENS,
        }
    }
}

/// One agent slot bound to one trial.
#[derive(Debug, Clone)]
pub enum Agent {
    Remote(RemoteAgent),
    Simulated(SimulatedAgent),
}

impl Agent {
    /// Instantiates the backend for a single trial. Remote backends read
    /// their credential here, so a missing key fails before any request.
    pub fn for_trial(
        spec: &BackendSpec,
        review: &Review,
        slot_seed: u64,
        http: &reqwest::Client,
        gates: &GateMap,
    ) -> Result<Self, AgentError> {
        match spec {
            BackendSpec::Simulated(policy) => Ok(Agent::Simulated(SimulatedAgent::for_trial(
                *policy, review, slot_seed,
            ))),
            BackendSpec::Remote(remote) => {
                let gate = gate_for(gates, remote);
                Ok(Agent::Remote(RemoteAgent::new(
                    remote.clone(),
                    http.clone(),
                    gate,
                )?))
            }
        }
    }

    /// Completes the pending user prompt and returns the reply text.
    pub async fn complete(
        &self,
        conversation: &Conversation,
        max_tokens: u32,
    ) -> Result<String, AgentError> {
        match self {
            Agent::Remote(agent) => agent.complete(conversation, max_tokens).await,
            Agent::Simulated(agent) => {
                let prompt = conversation.pending_prompt().ok_or_else(|| {
                    AgentError::Protocol(
                        "completion requested without a pending user message".into(),
                    )
                })?;
                agent.complete(prompt, conversation.context_before_prompt())
            }
        }
    }
}
