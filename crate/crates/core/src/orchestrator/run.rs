use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{
    advance, enforce_limits, recover_off_track, window_slice_with, ConfigError, LimitCheck, RunConfig,
    SlidingWindow, StepRecord, TerminalStatus, Transcript, TranscriptSummary,
};
use crate::agent::{
    call_with_retry, parse_decision, parse_reflection, parse_video, render_decision_prompt,
    render_reflection_prompt, render_video_prompt, Action, AgentError, Backend, HistoryEntry,
    ResponseError,
};
use crate::device::{Device, DeviceError, DeviceState};
use crate::video::{KeyframeSet, MosaicStyle};

/// The instructions a run is given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInput {
    pub id: String,
    /// What the demonstration shows being done.
    pub video_instruction: String,
    /// What the agent must do on the device.
    pub user_instruction: String,
}

struct Ended {
    status: TerminalStatus,
    detail: Option<String>,
}

impl Ended {
    fn new(status: TerminalStatus, detail: impl Into<Option<String>>) -> Self {
        Self { status, detail: detail.into() }
    }

    fn agent(err: AgentError) -> Self {
        Self::new(TerminalStatus::AgentFailure, err.to_string())
    }

    fn device(err: DeviceError) -> Self {
        // An unreachable device is also reported as a grounding failure: the
        // action could not be carried out.
        Self::new(TerminalStatus::GroundingFailure, err.to_string())
    }
}

struct Run<'a> {
    keys: &'a KeyframeSet,
    task: &'a TaskInput,
    device: &'a mut dyn Device,
    backend: &'a dyn Backend,
    config: &'a RunConfig,
    style: MosaicStyle,
    window: SlidingWindow,
    history: Vec<HistoryEntry>,
    state: DeviceState,
    pending_back: bool,
    device_actions: usize,
    records: Vec<StepRecord>,
}

fn history_line(summary: &str, executed: &Action, refined: bool) -> String {
    let summary = summary.trim();
    match (summary.is_empty(), refined) {
        (true, _) => executed.to_string(),
        (false, false) => summary.to_string(),
        (false, true) => format!("{summary} (executed {executed} instead)"),
    }
}

fn save_png(dir: Option<&Path>, name: String, image: &RgbImage) -> Option<PathBuf> {
    let dir = dir?;
    let path = dir.join(name);
    let saved = fs::create_dir_all(dir).map_err(|e| e.to_string()).and_then(|_| image.save(&path).map_err(|e| e.to_string()));
    match saved {
        Ok(()) => Some(path),
        Err(e) => {
            log::warn!("could not save {}: {e}", path.display());
            None
        }
    }
}

impl Run<'_> {
    fn artifacts(&self) -> Option<&Path> {
        self.config.artifact_dir.as_deref()
    }

    fn execute(&mut self, record: &mut StepRecord, action: &Action) -> Result<(RgbImage, RgbImage), Ended> {
        if let Some(status) = enforce_limits(self.records.len(), self.device_actions, LimitCheck::DeviceAction, self.config) {
            let detail = format!("{} device actions used; {action} not executed", self.device_actions);
            return Err(Ended::new(status, detail));
        }
        record.screen_before = self.state.screen_id.clone();
        let before = self.state.screenshot.clone();
        let after = self.device.execute(action).map_err(|e| {
            record.error = Some(e.to_string());
            Ended::device(e)
        })?;
        self.device_actions += 1;
        record.executed = Some(action.clone());
        record.screen_after = after.screen_id.clone();
        let i = record.iteration;
        record.before = save_png(self.artifacts(), format!("step{i:02}_before.png"), &before);
        record.after = save_png(self.artifacts(), format!("step{i:02}_after.png"), &after.screenshot);
        self.state = after;
        Ok((before, self.state.screenshot.clone()))
    }

    /// The recovery `Back`, run without consulting the agents.
    fn recovery_step(&mut self, record: &mut StepRecord) -> Result<(), Ended> {
        record.recovery = true;
        self.execute(record, &Action::Back)?;
        self.history.push(HistoryEntry::Step("Back (returning to the demonstrated path)".into()));
        Ok(())
    }

    fn agent_step(&mut self, record: &mut StepRecord) -> Result<Option<Ended>, Ended> {
        let i = record.iteration;
        let retries = self.config.retry_budget;
        let mosaic = window_slice_with(self.keys, self.window, &self.style)
            .map_err(|e| Ended::new(TerminalStatus::AgentFailure, e.to_string()))?;
        record.window_span = mosaic.span();
        record.mosaic = save_png(self.artifacts(), format!("step{i:02}_window.png"), &mosaic.image);

        let prompt_failure = |e: crate::agent::PromptError| Ended::new(TerminalStatus::AgentFailure, e.to_string());
        let (vt, ut) = (self.task.video_instruction.as_str(), self.task.user_instruction.as_str());

        let request = render_decision_prompt(&mosaic, &self.state.screenshot, vt, ut, &self.history)
            .map_err(prompt_failure)?
            .at_step(i);
        let decided = call_with_retry(self.backend, &request, parse_decision, retries);
        let decision = match decided {
            Ok(c) => {
                record.model_calls += c.calls;
                c.value
            }
            Err(e) => {
                record_failed_calls(record, &e);
                return Err(Ended::agent(e));
            }
        };
        record.decision = Some(decision.clone());
        if decision.operation.is_done() {
            return Ok(Some(Ended::new(TerminalStatus::Done, None)));
        }

        let request = render_reflection_prompt(&mosaic, &self.state.screenshot, vt, ut, &decision)
            .map_err(prompt_failure)?
            .at_step(i);
        let reflected = call_with_retry(self.backend, &request, |raw| parse_reflection(raw, &decision), retries);
        let reflection = match reflected {
            Ok(c) => {
                record.model_calls += c.calls;
                c.value
            }
            Err(e) => {
                record_failed_calls(record, &e);
                return Err(Ended::agent(e));
            }
        };
        let action = reflection.resolved(&decision);
        let refined = reflection.is_refined();
        record.reflection = Some(reflection);
        if action.is_done() {
            return Ok(Some(Ended::new(TerminalStatus::Done, Some("reflection answered Done".into()))));
        }

        let (before, after) = self.execute(record, &action)?;
        self.history.push(HistoryEntry::Step(history_line(&decision.summary, &action, refined)));

        let request = render_video_prompt(&mosaic, &[before, after], vt, ut)
            .map_err(prompt_failure)?
            .at_step(i);
        let tiles = mosaic.tile_count();
        let parse = |raw: &str| {
            let loc = parse_video(raw)?;
            if loc.frame > tiles {
                return Err(ResponseError::Contract(format!("Frame {} is outside a {tiles}-frame window", loc.frame)));
            }
            Ok(loc)
        };
        let loc = match call_with_retry(self.backend, &request, parse, retries) {
            Ok(c) => {
                record.model_calls += c.calls;
                c.value
            }
            Err(e) => {
                record_failed_calls(record, &e);
                return Err(Ended::agent(e));
            }
        };
        if let Some(recovery) = recover_off_track(&loc) {
            if !recovery.advisory.trim().is_empty() {
                self.history.push(HistoryEntry::Advisory(recovery.advisory));
            }
            self.pending_back = recovery.action.is_some();
        }
        self.window = advance(self.window, &loc, self.keys, self.config.window_offset);
        record.location = Some(loc);
        Ok(None)
    }
}

fn record_failed_calls(record: &mut StepRecord, err: &AgentError) {
    record.model_calls += match err {
        AgentError::Exhausted { raw_responses, .. } => raw_responses.len(),
        AgentError::Backend { .. } => 1,
    };
    record.error = Some(err.to_string());
}

/// Runs one task to a terminal status. Agent and device failures end the
/// run and are recorded in the transcript rather than returned.
pub fn run_task(
    keys: &KeyframeSet,
    task: &TaskInput,
    device: &mut dyn Device,
    backend: &dyn Backend,
    config: &RunConfig,
) -> Result<Transcript, ConfigError> {
    config.validate()?;
    let started = Instant::now();
    let window = SlidingWindow::head(config.window_width).map_err(|e| ConfigError(e.to_string()))?;
    let summary = |records: &[StepRecord], ended: Ended, device_actions: usize| TranscriptSummary {
        task_id: task.id.clone(),
        video_instruction: task.video_instruction.clone(),
        user_instruction: task.user_instruction.clone(),
        level: config.level,
        status: ended.status,
        detail: ended.detail,
        iterations: records.len(),
        device_actions,
        keyframes: keys.len(),
        seed: config.seed,
        wall_ms: started.elapsed().as_millis() as u64,
    };

    let state = match device.capture() {
        Ok(s) => s,
        Err(e) => {
            return Ok(Transcript { summary: summary(&[], Ended::device(e), 0), records: Vec::new() });
        }
    };
    let mut run = Run {
        keys,
        task,
        device,
        backend,
        config,
        style: MosaicStyle { tile_height: config.tile_height, ..MosaicStyle::default() },
        window,
        history: Vec::new(),
        state,
        pending_back: false,
        device_actions: 0,
        records: Vec::new(),
    };

    let ended = loop {
        if let Some(status) = enforce_limits(run.records.len(), run.device_actions, LimitCheck::Iteration, config) {
            break Ended::new(status, format!("{} iterations used", run.records.len()));
        }
        let t0 = Instant::now();
        let i = run.records.len() + 1;
        let mut record = StepRecord::begin(i, run.window.start, run.window.span(keys.len()));
        let outcome = if std::mem::take(&mut run.pending_back) {
            run.recovery_step(&mut record).map(|_| None)
        } else {
            run.agent_step(&mut record)
        };
        record.next_start = run.window.start;
        record.wall_ms = t0.elapsed().as_millis() as u64;
        match outcome {
            Ok(None) => run.records.push(record),
            Ok(Some(ended)) | Err(ended) => {
                // A run that stops before its action reached the device keeps
                // the record so the stopping decision is visible.
                run.records.push(record);
                break ended;
            }
        }
    };
    log::info!("task {}: {} after {} iterations", task.id, ended.status, run.records.len());
    let device_actions = run.device_actions;
    let records = std::mem::take(&mut run.records);
    Ok(Transcript { summary: summary(&records, ended, device_actions), records })
}
