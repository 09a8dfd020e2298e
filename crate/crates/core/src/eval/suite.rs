use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{compute_metrics, match_trajectory, EvalError, MatchResult, Metrics, Result, TaskSpec};
use crate::agent::{Backend, ScriptedBackend};
use crate::device::{SimDevice, UiGraph};
use crate::orchestrator::{run_task, RunConfig, TaskLevel, TerminalStatus, Transcript};
use crate::video::KeyframeSet;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    #[serde(default)]
    name: Option<String>,
    tasks: Vec<PathBuf>,
}

/// An ordered list of tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub name: String,
    pub tasks: Vec<TaskSpec>,
}

impl Suite {
    /// Reads a suite document listing task files relative to itself. Every
    /// unreadable task is reported, not just the first.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        let file: SuiteFile =
            toml::from_str(&text).map_err(|e| EvalError::Spec { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut tasks = Vec::new();
        let mut problems = Vec::new();
        for rel in &file.tasks {
            match TaskSpec::load(&base.join(rel)) {
                Ok(t) => tasks.push(t),
                Err(e) => problems.push(e.to_string()),
            }
        }
        if !problems.is_empty() {
            return Err(EvalError::SuiteConfig { problems });
        }
        let name = file
            .name
            .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        Ok(Self { name, tasks })
    }
}

/// Which model answers the agents during a suite run.
#[derive(Clone, Default)]
pub enum BackendChoice {
    /// Each task's own fixture file.
    #[default]
    Scripted,
    /// One backend for every task.
    Shared(Arc<dyn Backend>),
}

#[derive(Clone)]
pub struct SuiteOptions {
    /// Worker threads; 1 runs tasks in order.
    pub parallel: usize,
    pub backend: BackendChoice,
    /// Per-task `level` and `max_explorations` replace the matching fields.
    pub run: RunConfig,
    /// Transcripts are written to `<output>/<task id>/transcript.jsonl`.
    pub output_dir: Option<PathBuf>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { parallel: 1, backend: BackendChoice::Scripted, run: RunConfig::default(), output_dir: None }
    }
}

/// One row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub id: String,
    pub level: TaskLevel,
    pub status: TerminalStatus,
    pub success: bool,
    pub depth: usize,
    pub gold_len: usize,
    pub correct_decisions: usize,
    pub decisions: usize,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<PathBuf>,
}

impl TaskRow {
    fn new(spec: &TaskSpec, m: &MatchResult, t: &Transcript, transcript: Option<PathBuf>) -> Self {
        Self {
            id: spec.id.clone(),
            level: spec.level,
            status: m.status,
            success: m.success,
            depth: m.depth,
            gold_len: m.gold_len,
            correct_decisions: m.correct_decisions(),
            decisions: m.decisions(),
            steps: m.steps(),
            detail: t.summary.detail.clone(),
            transcript,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub metrics: Metrics,
    pub tasks: Vec<TaskRow>,
    /// How decision accuracy was judged.
    pub da_basis: String,
    #[serde(skip)]
    pub transcripts: Vec<Transcript>,
    #[serde(skip)]
    pub results: Vec<MatchResult>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Tasks whose run could not be driven to a decision by the backend.
    pub fn agent_failures(&self) -> Vec<&str> {
        self.tasks
            .iter()
            .filter(|t| t.status == TerminalStatus::AgentFailure)
            .map(|t| t.id.as_str())
            .collect()
    }

    /// Per-task rows followed by the aggregate SR / CR / DA / Step line.
    pub fn table(&self) -> String {
        let id_w = self.tasks.iter().map(|t| t.id.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<id_w$}  {:<8}  {:<17}  {:>7}  {:>6}  {:>6}  {:>5}",
            "Task", "Level", "Status", "Success", "CR", "DA", "Step"
        );
        for t in &self.tasks {
            let da = if t.decisions == 0 { 0.0 } else { t.correct_decisions as f64 / t.decisions as f64 };
            let _ = writeln!(
                out,
                "{:<id_w$}  {:<8}  {:<17}  {:>7}  {:>6.1}  {:>6.1}  {:>5}",
                t.id,
                t.level.as_str(),
                t.status.as_str(),
                if t.success { "yes" } else { "no" },
                100.0 * t.depth as f64 / t.gold_len as f64,
                100.0 * da,
                t.steps
            );
        }
        let m = &self.metrics;
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>6}  {:>6}  {:>6}  {:>5}", "SR", "CR", "DA", "Step");
        let _ = writeln!(out, "{:>6.1}  {:>6.1}  {:>6.1}  {:>5.1}", 100.0 * m.sr, 100.0 * m.cr, 100.0 * m.da, m.step);
        out
    }
}

struct Prepared<'a> {
    spec: &'a TaskSpec,
    graph: Arc<UiGraph>,
    keys: KeyframeSet,
    backend: Arc<dyn Backend>,
}

fn prepare<'a>(suite: &'a Suite, options: &SuiteOptions) -> Result<Vec<Prepared<'a>>> {
    let scripted = matches!(options.backend, BackendChoice::Scripted);
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for t in &suite.tasks {
        if !seen.insert(t.id.as_str()) {
            problems.push(format!("{}: duplicate task id", t.id));
        }
        if t.ui_graph.is_none() {
            problems.push(format!("{}: no ui_graph for the simulated device", t.id));
        }
        for missing in t.missing_files(scripted) {
            problems.push(format!("{}: missing {}", t.id, missing.display()));
        }
    }
    if !problems.is_empty() {
        return Err(EvalError::SuiteConfig { problems });
    }

    let mut prepared = Vec::new();
    for spec in &suite.tasks {
        let loaded = (|| {
            let graph = spec.load_graph()?;
            let keys = spec.load_keyframes(Some(&graph))?;
            let backend: Arc<dyn Backend> = match &options.backend {
                BackendChoice::Shared(b) => b.clone(),
                BackendChoice::Scripted => {
                    let path = spec.fixtures_path().expect("checked by missing_files");
                    Arc::new(ScriptedBackend::from_jsonl(&path).map_err(|e| EvalError::Spec { path, message: e.to_string() })?)
                }
            };
            Ok::<_, EvalError>(Prepared { spec, graph: Arc::new(graph), keys, backend })
        })();
        match loaded {
            Ok(p) => prepared.push(p),
            Err(e) => problems.push(format!("{}: {e}", spec.id)),
        }
    }
    if !problems.is_empty() {
        return Err(EvalError::SuiteConfig { problems });
    }
    Ok(prepared)
}

type Outcome = Result<(MatchResult, Transcript, Option<PathBuf>)>;

fn run_one(p: &Prepared<'_>, options: &SuiteOptions) -> Outcome {
    let mut config = options.run.clone();
    config.level = p.spec.level;
    config.max_explorations = p.spec.max_explorations.or(options.run.max_explorations);
    let mut device = SimDevice::new(p.graph.clone());
    let transcript = run_task(&p.keys, &p.spec.input(), &mut device, p.backend.as_ref(), &config)
        .map_err(|e| EvalError::SuiteConfig { problems: vec![format!("{}: {e}", p.spec.id)] })?;
    let result = match_trajectory(&transcript, &p.spec.gold);
    let path = match &options.output_dir {
        Some(dir) => {
            let path = dir.join(&p.spec.id).join("transcript.jsonl");
            transcript
                .write(&path)
                .map_err(|e| EvalError::Io { path: path.clone(), message: e.to_string() })?;
            Some(path)
        }
        None => None,
    };
    Ok((result, transcript, path))
}

/// Runs every task on its own simulated device, matches each transcript
/// against its gold trajectory and aggregates the metrics. Inputs are
/// checked up front; a missing file fails the whole suite before any run.
pub fn run_suite(suite: &Suite, options: &SuiteOptions) -> Result<SuiteReport> {
    if suite.tasks.is_empty() {
        return Err(EvalError::EmptySuite);
    }
    let prepared = prepare(suite, options)?;
    let slots: Vec<Mutex<Option<Outcome>>> = prepared.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = options.parallel.clamp(1, prepared.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(p) = prepared.get(i) else { break };
                let outcome = run_one(p, options);
                *slots[i].lock().expect("slot lock") = Some(outcome);
            });
        }
    });

    let mut rows = Vec::new();
    let mut transcripts = Vec::new();
    let mut results = Vec::new();
    for (p, slot) in prepared.iter().zip(slots) {
        let (result, transcript, path) = slot.into_inner().expect("slot lock").expect("every task ran")?;
        rows.push(TaskRow::new(p.spec, &result, &transcript, path));
        transcripts.push(transcript);
        results.push(result);
    }
    let metrics = compute_metrics(&results)?;
    Ok(SuiteReport {
        suite: suite.name.clone(),
        metrics,
        tasks: rows,
        da_basis: "executed action (after reflection), recovery Back included".into(),
        transcripts,
        results,
    })
}
