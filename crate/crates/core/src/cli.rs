//! The `vidguide` command line: `extract`, `run`, `eval` and `replay`.
//!
//! Settings resolve as flag, then environment variable, then the `--config`
//! file, then the built-in default.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (`run`: terminal status `done`) |
//! | 1 | configuration, input or I/O error |
//! | 2 | `run` ended with `step_limit` |
//! | 3 | `run` ended with `exploration_limit` |
//! | 4 | `run` ended with `agent_failure` |
//! | 5 | `run` ended with `grounding_failure` |
//! | 6 | `eval` finished but at least one task ended with `agent_failure` |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::agent::{Backend, HttpBackend, HttpConfig, ScriptedBackend};
use crate::device::{AdbDevice, Device, SimDevice, SystemRunner};
use crate::eval::{run_suite, BackendChoice, EvalError, Suite, SuiteOptions, TaskSpec};
use crate::orchestrator::{run_task, RunConfig, StepRecord, Transcript};
use crate::video::{build_mosaic, extract_keyframes, write_keyframes, FrameDir, KeyframeSet, PipelineConfig};

pub const EXIT_ERROR: i32 = 1;
pub const EXIT_SUITE_AGENT_FAILURE: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "vidguide", version, about = "Video-guided mobile GUI agent")]
pub struct Cli {
    /// TOML file with [pipeline] and [run] defaults.
    #[arg(long, global = true, env = "VIDGUIDE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract keyframes from a directory of PNG frames or a task's demonstration.
    Extract(ExtractArgs),
    /// Run one task and write its transcript.
    Run(RunArgs),
    /// Run a suite and report SR / CR / DA / Step.
    Eval(EvalArgs),
    /// Print a saved transcript step by step.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Sim,
    Adb,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineFlags {
    #[arg(long, env = "VIDGUIDE_STRIDE")]
    pub stride: Option<usize>,
    #[arg(long, env = "VIDGUIDE_CHANGE_THRESHOLD")]
    pub change_threshold: Option<f64>,
    #[arg(long, env = "VIDGUIDE_MIN_GAP")]
    pub min_gap: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EngineFlags {
    /// Keyframes per window (default 4).
    #[arg(long, env = "VIDGUIDE_WINDOW_WIDTH")]
    pub window_width: Option<usize>,
    #[arg(long, env = "VIDGUIDE_MAX_EXPLORATIONS")]
    pub max_explorations: Option<usize>,
    #[arg(long, value_enum, env = "VIDGUIDE_BACKEND")]
    pub backend: Option<BackendKind>,
    #[arg(long, env = "VIDGUIDE_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "VIDGUIDE_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory of numbered PNG frames, or a task spec with a demonstration.
    pub input: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    #[arg(long, env = "VIDGUIDE_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub task: PathBuf,
    #[command(flatten)]
    pub engine: EngineFlags,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    #[arg(long, value_enum, env = "VIDGUIDE_DEVICE")]
    pub device: Option<DeviceKind>,
    /// Scripted responses replacing the task's own fixture file.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// adb device serial.
    #[arg(long, env = "ANDROID_SERIAL")]
    pub serial: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub suite: PathBuf,
    #[command(flatten)]
    pub engine: EngineFlags,
    #[arg(long, env = "VIDGUIDE_PARALLEL")]
    pub parallel: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub transcript: PathBuf,
}

/// Contents of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: FilePipeline,
    pub run: FileRun,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilePipeline {
    pub sample_stride: Option<usize>,
    pub change_threshold: Option<f64>,
    pub min_gap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileRun {
    pub window_width: Option<usize>,
    pub window_offset: Option<i64>,
    pub max_explorations: Option<usize>,
    pub retry_budget: Option<usize>,
    pub tile_height: Option<u32>,
    pub backend: Option<BackendKind>,
    pub device: Option<DeviceKind>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub parallel: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Other(Box<dyn std::error::Error + Send + Sync>),
}

fn other(e: impl std::error::Error + Send + Sync + 'static) -> CliError {
    CliError::Other(Box::new(e))
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn pipeline_config(base: PipelineConfig, flags: &PipelineFlags, file: &FilePipeline) -> Result<PipelineConfig, CliError> {
    let config = PipelineConfig {
        sample_stride: flags.stride.or(file.sample_stride).unwrap_or(base.sample_stride),
        change_threshold: flags.change_threshold.or(file.change_threshold).unwrap_or(base.change_threshold),
        min_gap: flags.min_gap.or(file.min_gap).unwrap_or(base.min_gap),
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn run_config(flags: &EngineFlags, file: &FileRun) -> Result<RunConfig, CliError> {
    let d = RunConfig::default();
    let config = RunConfig {
        window_width: flags.window_width.or(file.window_width).unwrap_or(d.window_width),
        window_offset: file.window_offset.unwrap_or(d.window_offset),
        max_explorations: flags.max_explorations.or(file.max_explorations),
        retry_budget: file.retry_budget.unwrap_or(d.retry_budget),
        tile_height: file.tile_height,
        seed: flags.seed.or(file.seed),
        ..d
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn http_backend(seed: Option<u64>) -> Result<HttpBackend, CliError> {
    let mut config = HttpConfig::from_env().map_err(|e| CliError::Config(e.to_string()))?;
    config.seed = seed;
    Ok(HttpBackend::new(config))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Parses `args` (program name first) and runs the command, printing to
/// `out`. Returns the process exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(out, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Extract(a) => cmd_extract(a, &file, out),
        Command::Run(a) => cmd_run(a, &file, out),
        Command::Eval(a) => cmd_eval(a, &file, out),
        Command::Replay(a) => cmd_replay(a, out),
    }
}

fn extract_from(input: &Path, config: PipelineConfig) -> Result<KeyframeSet, CliError> {
    let is_spec = input.extension().is_some_and(|e| e == "toml");
    if is_spec {
        let mut spec = TaskSpec::load(input)?;
        spec.keyframes.pipeline = config;
        return Ok(spec.load_keyframes(None)?);
    }
    let video = FrameDir::open(input).map_err(other)?;
    extract_keyframes(&video, &config).map_err(other)
}

pub fn cmd_extract(args: &ExtractArgs, file: &FileConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = pipeline_config(PipelineConfig::default(), &args.pipeline, &file.pipeline)?;
    let keys = extract_from(&args.input, config)?;
    let dir = args
        .output
        .clone()
        .or_else(|| file.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("keyframes"));
    let manifest = write_keyframes(&keys, &dir).map_err(other)?;
    let preview = build_mosaic(&keys, 1, keys.len()).map_err(other)?;
    let preview_path = dir.join("preview.png");
    preview.image.save(&preview_path).map_err(|e| CliError::Io { path: preview_path.clone(), message: e.to_string() })?;
    let noun = if keys.len() == 1 { "keyframe" } else { "keyframes" };
    let indices: Vec<String> = keys.indices().iter().map(usize::to_string).collect();
    let w = write_err(Path::new("<stdout>"));
    writeln!(out, "{} {noun} at frames {}", keys.len(), indices.join(", ")).map_err(&w)?;
    writeln!(out, "manifest: {}", manifest.display()).map_err(&w)?;
    writeln!(out, "preview: {}", preview_path.display()).map_err(&w)?;
    Ok(0)
}

pub fn cmd_run(args: &RunArgs, file: &FileConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut spec = TaskSpec::load(&args.task)?;
    spec.keyframes.pipeline = pipeline_config(spec.keyframes.pipeline, &args.pipeline, &file.pipeline)?;
    let mut config = run_config(&args.engine, &file.run)?;
    config.level = spec.level;
    if config.max_explorations.is_none() {
        config.max_explorations = spec.max_explorations;
    }
    let output = args.engine.output.clone().or_else(|| file.run.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(&spec.id));
    config.artifact_dir = Some(output.join("artifacts"));

    // The backend is resolved before the device so a missing key fails
    // before anything is touched.
    let backend: Box<dyn Backend> = match args.engine.backend.or(file.run.backend).unwrap_or(BackendKind::Scripted) {
        BackendKind::Http => Box::new(http_backend(config.seed)?),
        BackendKind::Scripted => {
            let path = args
                .fixtures
                .clone()
                .or_else(|| spec.fixtures_path())
                .ok_or_else(|| CliError::Config(format!("task {} has no fixtures for the scripted backend", spec.id)))?;
            Box::new(ScriptedBackend::from_jsonl(&path).map_err(other)?)
        }
    };
    let device_kind = args.device.or(file.run.device).unwrap_or(DeviceKind::Sim);
    let graph = match (device_kind, spec.ui_graph.is_some()) {
        (DeviceKind::Sim, false) => return Err(CliError::Config(format!("task {} has no ui_graph for --device sim", spec.id))),
        (_, true) => Some(spec.load_graph()?),
        (DeviceKind::Adb, false) => None,
    };
    let keys = spec.load_keyframes(graph.as_ref())?;
    let mut device: Box<dyn Device> = match device_kind {
        DeviceKind::Sim => Box::new(SimDevice::new(graph.expect("checked above"))),
        DeviceKind::Adb => Box::new(AdbDevice::new(SystemRunner { serial: args.serial.clone(), ..SystemRunner::default() })),
    };

    let transcript = run_task(&keys, &spec.input(), device.as_mut(), backend.as_ref(), &config)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let path = output.join("transcript.jsonl");
    transcript.write(&path).map_err(other)?;
    let s = &transcript.summary;
    let w = write_err(Path::new("<stdout>"));
    writeln!(
        out,
        "task {}: {} after {} iterations, {} device actions",
        s.task_id, s.status, s.iterations, s.device_actions
    )
    .map_err(&w)?;
    if let Some(detail) = &s.detail {
        writeln!(out, "  {detail}").map_err(&w)?;
    }
    let refined = transcript.refined_steps();
    if !refined.is_empty() {
        let list: Vec<String> = refined.iter().map(usize::to_string).collect();
        writeln!(out, "  reflection refined step(s) {}", list.join(", ")).map_err(&w)?;
    }
    writeln!(out, "transcript: {}", path.display()).map_err(&w)?;
    Ok(s.status.exit_code())
}

pub fn cmd_eval(args: &EvalArgs, file: &FileConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let suite = Suite::load(&args.suite)?;
    let run = run_config(&args.engine, &file.run)?;
    let backend = match args.engine.backend.or(file.run.backend).unwrap_or(BackendKind::Scripted) {
        BackendKind::Scripted => BackendChoice::Scripted,
        BackendKind::Http => BackendChoice::Shared(Arc::new(http_backend(run.seed)?)),
    };
    let output = args.engine.output.clone().or_else(|| file.run.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(&suite.name));
    let options = SuiteOptions {
        parallel: args.parallel.or(file.run.parallel).unwrap_or(1).max(1),
        backend,
        run,
        output_dir: Some(output.clone()),
    };
    let report = run_suite(&suite, &options)?;
    let report_path = output.join("report.json");
    fs::create_dir_all(&output).map_err(write_err(&output))?;
    fs::write(&report_path, report.to_json()).map_err(write_err(&report_path))?;
    let w = write_err(Path::new("<stdout>"));
    write!(out, "{}", report.table()).map_err(&w)?;
    writeln!(out, "report: {}", report_path.display()).map_err(&w)?;
    let failures = report.agent_failures();
    if failures.is_empty() {
        Ok(0)
    } else {
        writeln!(out, "agent failures: {}", failures.join(", ")).map_err(&w)?;
        Ok(EXIT_SUITE_AGENT_FAILURE)
    }
}

fn narrate(r: &StepRecord) -> String {
    let mut lines = vec![format!("Step {}  window {}-{}", r.iteration, r.window_span.0, r.window_span.1)];
    if r.recovery {
        lines.push("  recovery:   Back (requested by the video agent)".to_string());
    }
    if let Some(d) = &r.decision {
        lines.push(format!("  decision:   {}  ({})", d.operation, d.summary.trim()));
    }
    if let Some(refl) = &r.reflection {
        match (&refl.verdict, r.was_refined()) {
            (_, true) => lines.push(format!("  reflection: refined to {}", r.resolved().expect("has decision"))),
            _ => lines.push("  reflection: pass".to_string()),
        }
    }
    if let Some(a) = &r.executed {
        let screens = match (&r.screen_before, &r.screen_after) {
            (Some(b), Some(a)) => format!("  [{b} -> {a}]"),
            _ => String::new(),
        };
        lines.push(format!("  executed:   {a}{screens}"));
    }
    if let Some(loc) = &r.location {
        if loc.is_off_track() {
            let back = if loc.need_back { ", Back requested" } else { "" };
            lines.push(format!(
                "  location:   off track{back}: {}",
                loc.analysis.as_deref().unwrap_or("").trim()
            ));
        } else {
            lines.push(format!("  location:   frame {} -> next start {}", loc.frame, r.next_start));
        }
    }
    if let Some(e) = &r.error {
        lines.push(format!("  error:      {e}"));
    }
    let images: Vec<String> = [&r.mosaic, &r.before, &r.after]
        .into_iter()
        .flatten()
        .map(|p| p.display().to_string())
        .collect();
    if !images.is_empty() {
        lines.push(format!("  images:     {}", images.join(", ")));
    }
    lines.join("\n")
}

/// The replay narrative; one block per step record.
pub fn render_replay(t: &Transcript) -> String {
    let s = &t.summary;
    let mut blocks = vec![format!(
        "Task {} ({})\n  video: {}\n  user:  {}",
        s.task_id, s.level, s.video_instruction, s.user_instruction
    )];
    blocks.extend(t.records.iter().map(narrate));
    let mut end = format!(
        "Result: {} after {} iterations, {} device actions",
        s.status, s.iterations, s.device_actions
    );
    if let Some(d) = &s.detail {
        end.push_str(&format!(" ({d})"));
    }
    blocks.push(end);
    blocks.join("\n\n") + "\n"
}

pub fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let transcript = Transcript::read(&args.transcript).map_err(other)?;
    write!(out, "{}", render_replay(&transcript)).map_err(write_err(Path::new("<stdout>")))?;
    Ok(0)
}
