//! The decide → reflect → execute → locate loop over a sliding window of
//! demonstration keyframes.

mod run;
mod transcript;
mod window;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Action, VideoLocation, DEFAULT_RETRY_BUDGET};

pub use run::{run_task, TaskInput};
pub use transcript::{StepRecord, TerminalStatus, Transcript, TranscriptError, TranscriptSummary};
pub use window::{advance, window_slice, window_slice_with, SlidingWindow, DEFAULT_WINDOW_WIDTH};

/// Task difficulty; sets the device-action budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskLevel {
    #[default]
    Basic,
    Normal,
    Advanced,
}

impl TaskLevel {
    pub const ALL: [TaskLevel; 3] = [TaskLevel::Basic, TaskLevel::Normal, TaskLevel::Advanced];

    pub fn step_limit(self) -> usize {
        match self {
            TaskLevel::Basic => 10,
            TaskLevel::Normal => 15,
            TaskLevel::Advanced => 20,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskLevel::Basic => "basic",
            TaskLevel::Normal => "normal",
            TaskLevel::Advanced => "advanced",
        }
    }
}

impl fmt::Display for TaskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskLevel {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ConfigError(format!("unknown task level {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid run configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window_width: usize,
    /// Added to the anchored position when advancing the window.
    pub window_offset: i64,
    /// Iteration cap. Unset means one more than the level's step limit, so
    /// a `Done` right after the last allowed action is still seen.
    pub max_explorations: Option<usize>,
    /// Re-asks per agent call after an unparseable answer.
    pub retry_budget: usize,
    pub level: TaskLevel,
    /// Scale mosaic tiles to this height; unset keeps source size.
    pub tile_height: Option<u32>,
    /// Recorded in the transcript and passed to backends that sample.
    pub seed: Option<u64>,
    /// Where mosaics and screenshots are saved; nothing is saved when unset.
    #[serde(skip)]
    pub artifact_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window_width: DEFAULT_WINDOW_WIDTH,
            window_offset: 0,
            max_explorations: None,
            retry_budget: DEFAULT_RETRY_BUDGET,
            level: TaskLevel::Basic,
            tile_height: None,
            seed: None,
            artifact_dir: None,
        }
    }
}

impl RunConfig {
    pub fn for_level(level: TaskLevel) -> Self {
        Self { level, ..Self::default() }
    }

    pub fn step_limit(&self) -> usize {
        self.level.step_limit()
    }

    pub fn max_explorations(&self) -> usize {
        self.max_explorations.unwrap_or(self.step_limit() + 1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_width == 0 {
            return Err(ConfigError("window_width must be at least 1".into()));
        }
        if self.max_explorations == Some(0) {
            return Err(ConfigError("max_explorations must be at least 1".into()));
        }
        if self.tile_height == Some(0) {
            return Err(ConfigError("tile_height must be positive".into()));
        }
        Ok(())
    }
}

/// Which limit [`enforce_limits`] is checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitCheck {
    /// Before starting another iteration.
    Iteration,
    /// Before sending another action to the device.
    DeviceAction,
}

/// `iterations` and `device_actions` are the counts so far.
pub fn enforce_limits(
    iterations: usize,
    device_actions: usize,
    check: LimitCheck,
    config: &RunConfig,
) -> Option<TerminalStatus> {
    match check {
        LimitCheck::Iteration if iterations >= config.max_explorations() => Some(TerminalStatus::ExplorationLimit),
        LimitCheck::DeviceAction if device_actions >= config.step_limit() => Some(TerminalStatus::StepLimit),
        _ => None,
    }
}

/// What to do after the video agent reports the device off the demonstrated
/// path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovery {
    /// Executed as its own iteration, bypassing decision and reflection.
    pub action: Option<Action>,
    /// Shown to the next decision call.
    pub advisory: String,
}

pub fn recover_off_track(loc: &VideoLocation) -> Option<Recovery> {
    if !loc.is_off_track() {
        return None;
    }
    Some(Recovery {
        action: loc.need_back.then_some(Action::Back),
        advisory: loc.analysis.clone().unwrap_or_default(),
    })
}
