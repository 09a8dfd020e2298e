//! Benchmark tasks, gold-trajectory matching and the SR / CR / DA / Step
//! metrics.

mod metrics;
mod suite;
mod task;

use std::path::PathBuf;

use thiserror::Error;

pub use metrics::{compute_metrics, match_trajectory, MatchResult, Metrics};
pub use suite::{run_suite, BackendChoice, Suite, SuiteOptions, SuiteReport, TaskRow};
pub use task::{GoldStep, KeyframeSource, TaskSpec, DEFAULT_HOLD};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("suite has no tasks")]
    EmptySuite,
    #[error("suite configuration:\n  {}", problems.join("\n  "))]
    SuiteConfig { problems: Vec<String> },
    #[error("{path}: {message}")]
    Spec { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("task {task}: UI graph: {message}")]
    Device { task: String, message: String },
    #[error("task {task}: keyframes: {message}")]
    Keyframes { task: String, message: String },
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
