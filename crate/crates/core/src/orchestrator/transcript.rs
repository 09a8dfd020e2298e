use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TaskLevel;
use crate::agent::{Action, Decision, ReflectionResult, VideoLocation};

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Done,
    StepLimit,
    ExplorationLimit,
    AgentFailure,
    GroundingFailure,
}

impl TerminalStatus {
    pub const ALL: [TerminalStatus; 5] = [
        TerminalStatus::Done,
        TerminalStatus::StepLimit,
        TerminalStatus::ExplorationLimit,
        TerminalStatus::AgentFailure,
        TerminalStatus::GroundingFailure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerminalStatus::Done => "done",
            TerminalStatus::StepLimit => "step_limit",
            TerminalStatus::ExplorationLimit => "exploration_limit",
            TerminalStatus::AgentFailure => "agent_failure",
            TerminalStatus::GroundingFailure => "grounding_failure",
        }
    }

    /// Process exit code for `run`. 1 is left for configuration and I/O
    /// errors raised before the loop starts.
    pub fn exit_code(self) -> i32 {
        match self {
            TerminalStatus::Done => 0,
            TerminalStatus::StepLimit => 2,
            TerminalStatus::ExplorationLimit => 3,
            TerminalStatus::AgentFailure => 4,
            TerminalStatus::GroundingFailure => 5,
        }
    }
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One loop iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub window_start: usize,
    /// Inclusive keyframe positions on the mosaic.
    pub window_span: (usize, usize),
    /// Set on iterations that only replayed a `Back` for the video agent.
    #[serde(default)]
    pub recovery: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mosaic: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<ReflectionResult>,
    /// What reached the device, if anything.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub executed: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen_before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen_after: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<VideoLocation>,
    pub next_start: usize,
    /// Backend calls made during this iteration, retries included.
    #[serde(default)]
    pub model_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Excluded from determinism comparisons.
    #[serde(default)]
    pub wall_ms: u64,
}

impl StepRecord {
    pub(crate) fn begin(iteration: usize, window_start: usize, window_span: (usize, usize)) -> Self {
        Self {
            iteration,
            window_start,
            window_span,
            recovery: false,
            mosaic: None,
            decision: None,
            reflection: None,
            executed: None,
            screen_before: None,
            screen_after: None,
            before: None,
            after: None,
            location: None,
            next_start: window_start,
            model_calls: 0,
            error: None,
            wall_ms: 0,
        }
    }

    /// The decision agent's operation.
    pub fn proposed(&self) -> Option<&Action> {
        self.decision.as_ref().map(|d| &d.operation)
    }

    /// The operation after reflection.
    pub fn resolved(&self) -> Option<Action> {
        let decision = self.decision.as_ref()?;
        Some(match &self.reflection {
            Some(r) => r.resolved(decision),
            None => decision.operation.clone(),
        })
    }

    /// True when reflection replaced the decision agent's operation.
    pub fn was_refined(&self) -> bool {
        match (self.proposed(), self.resolved()) {
            (Some(o), Some(ro)) => *o != ro,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub task_id: String,
    pub video_instruction: String,
    pub user_instruction: String,
    pub level: TaskLevel,
    pub status: TerminalStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub iterations: usize,
    pub device_actions: usize,
    pub keyframes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Step(Box<StepRecord>),
    Summary(TranscriptSummary),
}

/// The audit trail of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub records: Vec<StepRecord>,
    pub summary: TranscriptSummary,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

impl Transcript {
    pub fn status(&self) -> TerminalStatus {
        self.summary.status
    }

    /// Executed device actions in order, recovery `Back`s included.
    pub fn executed_actions(&self) -> Vec<&Action> {
        self.records.iter().filter_map(|r| r.executed.as_ref()).collect()
    }

    pub fn refined_steps(&self) -> Vec<usize> {
        self.records.iter().filter(|r| r.was_refined()).map(|r| r.iteration).collect()
    }

    /// One JSON object per line: step records, then the summary.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&Line::Step(Box::new(r.clone()))).expect("record serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Line::Summary(self.summary.clone())).expect("summary serializes"));
        out.push('\n');
        out
    }

    /// [`Transcript::to_jsonl`] with timing fields zeroed, for comparing runs.
    pub fn canonical_jsonl(&self) -> String {
        let mut t = self.clone();
        t.records.iter_mut().for_each(|r| r.wall_ms = 0);
        t.summary.wall_ms = 0;
        t.to_jsonl()
    }

    pub fn write(&self, path: &Path) -> Result<(), TranscriptError> {
        let io_err = |source| TranscriptError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
        let mut f = fs::File::create(path).map_err(io_err)?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(io_err)
    }

    pub fn read(path: &Path) -> Result<Self, TranscriptError> {
        let text = fs::read_to_string(path).map_err(|source| TranscriptError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    /// Parses line-delimited records; `path` only labels errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self, TranscriptError> {
        let err = |line: usize, message: String| TranscriptError::Parse { path: path.to_path_buf(), line, message };
        let mut records = Vec::new();
        let mut summary = None;
        let mut last_line = 0;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            if raw.trim().is_empty() {
                continue;
            }
            last_line = line_no;
            if summary.is_some() {
                return Err(err(line_no, "content after the summary record".into()));
            }
            match serde_json::from_str::<Line>(raw).map_err(|e| err(line_no, e.to_string()))? {
                Line::Step(r) => records.push(*r),
                Line::Summary(s) => summary = Some(s),
            }
        }
        let summary = summary.ok_or_else(|| {
            let where_ = if last_line == 0 { 1 } else { last_line };
            err(where_, "transcript has no summary record".into())
        })?;
        Ok(Self { records, summary })
    }
}
