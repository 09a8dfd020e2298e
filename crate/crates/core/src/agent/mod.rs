//! Prompting, model backends and response parsing for the three agent roles:
//! the decision agent proposes an operation, the reflection agent validates
//! or replaces it, and the video agent anchors the device to a window frame.

mod action;
mod backend;
mod parse;
mod prompt;
mod retry;

use std::fmt;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{parse_action, Action, Direction};
pub use backend::{
    encode_png_base64, Backend, BackendError, FixtureRecord, HttpBackend, HttpConfig,
    ScriptedBackend, ENV_API_KEY, ENV_API_URL, ENV_MODEL,
};
pub use parse::{extract_json_object, parse_decision, parse_reflection, parse_video, strip_fences};
pub use prompt::{
    compose_before_after, render_decision_prompt, render_history, render_reflection_prompt,
    render_video_prompt, substitute, HistoryEntry, PromptError,
};
pub use retry::{call_with_retry, AgentError, Completed, DEFAULT_RETRY_BUDGET};

/// Which agent a request is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Decision,
    Reflection,
    Video,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentRole::Decision => "decision",
            AgentRole::Reflection => "reflection",
            AgentRole::Video => "video",
        })
    }
}

/// A fully rendered model call. Images are ordered window mosaic first,
/// device screenshot(s) second.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRequest {
    pub role: AgentRole,
    /// Loop iteration this call belongs to (1-based; 0 when unattached).
    pub step: usize,
    /// 0 for the first call, incremented by each retry.
    pub attempt: usize,
    pub system: String,
    pub user: String,
    pub images: Vec<RgbImage>,
}

impl ModelRequest {
    pub fn new(role: AgentRole, system: String, user: String, images: Vec<RgbImage>) -> Self {
        Self { role, step: 0, attempt: 0, system, user, images }
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelResponse {
    pub text: String,
}

/// Failures to interpret a model's text. All of them are worth a retry.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ResponseError {
    #[error("no JSON object found in response")]
    NoJson,
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("unknown operation {0:?}")]
    Vocabulary(String),
    #[error("malformed operation: {0}")]
    Malformed(String),
    #[error("response violates the output contract: {0}")]
    Contract(String),
}

impl ResponseError {
    pub fn is_retryable(&self) -> bool {
        true
    }
}

/// The decision agent's answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(rename = "Thought")]
    pub thought: String,
    #[serde(rename = "Operation")]
    pub operation: Action,
    #[serde(rename = "Summary")]
    pub summary: String,
}

impl Decision {
    /// The JSON shape the decision prompt asks for.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("decision serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "operation", rename_all = "snake_case")]
pub enum Verdict {
    PassThrough,
    Refined(Action),
}

/// The reflection agent's answer, resolved against the proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionResult {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub raw_reasoning: String,
}

impl ReflectionResult {
    /// The operation to execute: the original on pass-through.
    pub fn resolved(&self, original: &Decision) -> Action {
        match &self.verdict {
            Verdict::PassThrough => original.operation.clone(),
            Verdict::Refined(a) => a.clone(),
        }
    }

    pub fn is_refined(&self) -> bool {
        matches!(self.verdict, Verdict::Refined(_))
    }
}

/// The video agent's answer: which window frame the device now matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoLocation {
    pub thought: String,
    /// Window-relative, 1-based; 0 means the device left the demonstration.
    pub frame: usize,
    pub analysis: Option<String>,
    pub need_back: bool,
}

impl VideoLocation {
    pub fn is_off_track(&self) -> bool {
        self.frame == 0
    }

    pub fn validate(&self) -> Result<(), ResponseError> {
        match (self.frame, &self.analysis, self.need_back) {
            (0, None, _) => Err(ResponseError::Contract("Frame 0 requires an Analysis".into())),
            (f, Some(_), _) if f > 0 => {
                Err(ResponseError::Contract(format!("Frame {f} must have a null Analysis")))
            }
            (f, _, true) if f > 0 => {
                Err(ResponseError::Contract(format!("Need_Back must be false when Frame is {f}")))
            }
            _ => Ok(()),
        }
    }
}
