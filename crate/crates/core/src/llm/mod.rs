//! Backend-agnostic chat completion.
//!
//! Every prompt the agents send is a [`ChatRequest`] tagged with its kind.
//! Backends:
//! - [`RemoteBackend`]: OpenAI-compatible `/chat/completions` over HTTP.
//! - [`ScriptedBackend`]: fixture table keyed by prompt hash or seed key.
//! - [`HeuristicBackend`]: offline rule table so full runs need no API.
//!
//! [`SidecarClient`] talks to the optional model-scorer service.
//!
//! [`with_budget`] adds a concurrency limit and retry policy for remote calls.
//! This module is the only place that touches the network.

mod budget;
mod heuristic;
pub mod http;
mod recording;
mod remote;
mod request;
mod scripted;
mod sidecar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use budget::{with_budget, BudgetedBackend, RetryPolicy};
pub use heuristic::{HeuristicBackend, HeuristicThresholds};
pub use recording::RecordingBackend;
pub use remote::{RemoteBackend, RemoteConfig};
pub use request::{ChatRequest, PromptContext, ReflectTally};
pub use scripted::{FixtureLine, ScriptedBackend};
pub use sidecar::SidecarClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTag {
    Enrich,
    Like,
    Reblog,
    Comment,
    Topics,
    Post,
    Plan,
    Summary,
    Reflect,
}

impl PromptTag {
    pub const ALL: [PromptTag; 9] = [
        PromptTag::Enrich,
        PromptTag::Like,
        PromptTag::Reblog,
        PromptTag::Comment,
        PromptTag::Topics,
        PromptTag::Post,
        PromptTag::Plan,
        PromptTag::Summary,
        PromptTag::Reflect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptTag::Enrich => "enrich",
            PromptTag::Like => "like",
            PromptTag::Reblog => "reblog",
            PromptTag::Comment => "comment",
            PromptTag::Topics => "topics",
            PromptTag::Post => "post",
            PromptTag::Plan => "plan",
            PromptTag::Summary => "summary",
            PromptTag::Reflect => "reflect",
        }
    }

    /// Decisions are sampled greedily; generation gets some diversity.
    pub fn temperature(self) -> f64 {
        match self {
            PromptTag::Like | PromptTag::Reblog | PromptTag::Comment | PromptTag::Reflect | PromptTag::Plan => 0.0,
            PromptTag::Post | PromptTag::Topics | PromptTag::Enrich | PromptTag::Summary => 0.7,
        }
    }

    pub fn max_tokens(self) -> u32 {
        match self {
            PromptTag::Like | PromptTag::Reblog | PromptTag::Reflect => 16,
            PromptTag::Summary => 120,
            PromptTag::Comment | PromptTag::Topics | PromptTag::Plan => 256,
            PromptTag::Post => 400,
            PromptTag::Enrich => 1024,
        }
    }
}

impl fmt::Display for PromptTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown prompt tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("no scripted completion for tag {tag}, key {key}")]
    FixtureMiss { tag: PromptTag, key: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

impl LlmError {
    /// Transport failures, rate limits and server errors are worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Which backend family produced the completions of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Scripted,
    Heuristic,
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(BackendKind::Remote),
            "scripted" => Ok(BackendKind::Scripted),
            "heuristic" => Ok(BackendKind::Heuristic),
            _ => Err(format!("unknown backend {s:?}, expected remote|scripted|heuristic")),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Remote => "remote",
            BackendKind::Scripted => "scripted",
            BackendKind::Heuristic => "heuristic",
        })
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;

    /// Whether calls leave the process; only those are budgeted and retried.
    fn is_remote(&self) -> bool {
        false
    }

    /// Completion with surrounding whitespace trimmed, which is the only
    /// transformation parsers ever see.
    fn complete_text(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.complete(request).map(|s| s.trim().to_string())
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
    fn is_remote(&self) -> bool {
        (**self).is_remote()
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
    fn is_remote(&self) -> bool {
        (**self).is_remote()
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
    fn is_remote(&self) -> bool {
        (**self).is_remote()
    }
}
