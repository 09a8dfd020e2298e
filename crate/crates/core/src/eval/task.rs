use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::agent::Action;
use crate::device::{load_ui_graph, render_demonstration, UiGraph};
use crate::orchestrator::{TaskInput, TaskLevel};
use crate::video::{extract_keyframes, read_manifest, FrameDir, KeyframeSet, PipelineConfig};

/// Frames per screen when a demonstration is rendered from a UI graph.
pub const DEFAULT_HOLD: usize = 30;

fn default_hold() -> usize {
    DEFAULT_HOLD
}

/// Where a task's demonstration keyframes come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeSource {
    /// Screens of the task's UI graph, rendered as a recording.
    #[serde(default)]
    pub demonstration: Option<Vec<String>>,
    #[serde(default = "default_hold")]
    pub hold: usize,
    /// A directory of numbered PNG frames.
    #[serde(default)]
    pub frames: Option<PathBuf>,
    /// A manifest written by `extract`.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

/// One step of the reference trajectory: any of these actions counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldStep {
    pub any: Vec<Action>,
}

impl GoldStep {
    pub fn accepts(&self, action: &Action) -> bool {
        self.any.iter().any(|g| same_action(g, action))
    }
}

/// Exact equality, except `Click_text` targets compare case-insensitively.
fn same_action(gold: &Action, actual: &Action) -> bool {
    match (gold, actual) {
        (Action::ClickText { text: a }, Action::ClickText { text: b }) => a.trim().eq_ignore_ascii_case(b.trim()),
        _ => gold == actual,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    #[serde(default)]
    pub level: TaskLevel,
    pub video_instruction: String,
    pub user_instruction: String,
    pub keyframes: KeyframeSource,
    pub gold: Vec<GoldStep>,
    /// UI graph for simulated runs.
    #[serde(default)]
    pub ui_graph: Option<PathBuf>,
    /// Scripted backend responses.
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    #[serde(default)]
    pub max_explorations: Option<usize>,
    /// Directory that relative paths resolve against; the task file's own.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl TaskSpec {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut spec: TaskSpec =
            toml::from_str(text).map_err(|e| EvalError::Spec { path: origin.to_path_buf(), message: e.to_string() })?;
        spec.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        spec.validate().map_err(|message| EvalError::Spec { path: origin.to_path_buf(), message })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text, path)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id is empty".into());
        }
        if self.gold.is_empty() {
            return Err(format!("task {}: gold trajectory is empty", self.id));
        }
        if let Some(i) = self.gold.iter().position(|g| g.any.is_empty()) {
            return Err(format!("task {}: gold step {} accepts no action", self.id, i + 1));
        }
        let k = &self.keyframes;
        let sources = [k.demonstration.is_some(), k.frames.is_some(), k.manifest.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(format!("task {}: keyframes needs exactly one of demonstration, frames or manifest", self.id));
        }
        if k.demonstration.is_some() && self.ui_graph.is_none() {
            return Err(format!("task {}: a rendered demonstration needs ui_graph", self.id));
        }
        if k.hold == 0 {
            return Err(format!("task {}: keyframes.hold must be positive", self.id));
        }
        if self.max_explorations == Some(0) {
            return Err(format!("task {}: max_explorations must be at least 1", self.id));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn ui_graph_path(&self) -> Option<PathBuf> {
        self.ui_graph.as_deref().map(|p| self.resolve(p))
    }

    pub fn fixtures_path(&self) -> Option<PathBuf> {
        self.fixtures.as_deref().map(|p| self.resolve(p))
    }

    pub fn input(&self) -> TaskInput {
        TaskInput {
            id: self.id.clone(),
            video_instruction: self.video_instruction.clone(),
            user_instruction: self.user_instruction.clone(),
        }
    }

    pub fn load_graph(&self) -> Result<UiGraph> {
        let path = self
            .ui_graph_path()
            .ok_or_else(|| EvalError::Spec { path: self.base_dir.clone(), message: format!("task {} has no ui_graph", self.id) })?;
        load_ui_graph(&path).map_err(|e| EvalError::Device { task: self.id.clone(), message: e.to_string() })
    }

    /// Builds the keyframe set. `graph` is needed for rendered demonstrations.
    pub fn load_keyframes(&self, graph: Option<&UiGraph>) -> Result<KeyframeSet> {
        let k = &self.keyframes;
        let video_err = |e: crate::video::VideoError| EvalError::Keyframes { task: self.id.clone(), message: e.to_string() };
        if let Some(path) = &k.demonstration {
            let owned;
            let graph = match graph {
                Some(g) => g,
                None => {
                    owned = self.load_graph()?;
                    &owned
                }
            };
            let frames = render_demonstration(graph, path, k.hold)
                .map_err(|e| EvalError::Keyframes { task: self.id.clone(), message: e.to_string() })?;
            let mut keys = extract_keyframes(&frames, &k.pipeline).map_err(video_err)?;
            keys.source_id = format!("{}:demonstration", self.id);
            return Ok(keys);
        }
        if let Some(dir) = &k.frames {
            let video = FrameDir::open(self.resolve(dir)).map_err(video_err)?;
            return extract_keyframes(&video, &k.pipeline).map_err(video_err);
        }
        let manifest = k.manifest.as_deref().expect("validated: one source is set");
        read_manifest(&self.resolve(manifest)).map_err(video_err)
    }

    /// Files this task needs that do not exist.
    pub fn missing_files(&self, need_fixtures: bool) -> Vec<PathBuf> {
        let mut wanted: Vec<PathBuf> = Vec::new();
        wanted.extend(self.ui_graph_path());
        if need_fixtures {
            match self.fixtures_path() {
                Some(p) => wanted.push(p),
                None => wanted.push(self.base_dir.join(format!("<fixtures for {}>", self.id))),
            }
        }
        wanted.extend(self.keyframes.frames.as_deref().map(|p| self.resolve(p)));
        wanted.extend(self.keyframes.manifest.as_deref().map(|p| self.resolve(p)));
        wanted.into_iter().filter(|p| !p.exists()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
id = "wifi"
level = "normal"
video_instruction = "Turn on Bluetooth"
user_instruction = "Turn on Wi-Fi"
ui_graph = "settings.toml"
fixtures = "wifi.jsonl"

[keyframes]
demonstration = ["home", "settings"]

[[gold]]
any = ["Click (2)", "Click_text (Settings)"]

[[gold]]
any = ["Click (1)"]
"#;

    #[test]
    fn parses_and_resolves() {
        let spec = TaskSpec::parse(SPEC, Path::new("/suite/tasks/wifi.toml")).unwrap();
        assert_eq!(spec.level, TaskLevel::Normal);
        assert_eq!(spec.keyframes.hold, DEFAULT_HOLD);
        assert_eq!(spec.ui_graph_path().unwrap(), Path::new("/suite/tasks/settings.toml"));
        assert!(spec.gold[0].accepts(&Action::ClickText { text: "settings".into() }));
        assert!(!spec.gold[0].accepts(&Action::Click { id: 1 }));
    }

    #[test]
    fn rejects_empty_gold_and_ambiguous_source() {
        let no_gold = SPEC.split("[[gold]]").next().unwrap();
        assert!(TaskSpec::parse(no_gold, Path::new("x.toml")).is_err());
        let two = SPEC.replace("[keyframes]\n", "[keyframes]\nmanifest = \"k.jsonl\"\n");
        assert!(TaskSpec::parse(&two, Path::new("x.toml")).is_err());
        let bad_action = SPEC.replace("Click (1)", "Fly (1)");
        assert!(TaskSpec::parse(&bad_action, Path::new("x.toml")).is_err());
    }
}
