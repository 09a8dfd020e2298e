//! Scripted runs shared by the orchestrator tests and the acceptance runner.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use vidguide::agent::{AgentRole, ScriptedBackend};
use vidguide::device::{parse_ui_graph, SimDevice, UiGraph};
use vidguide::eval::TaskSpec;
use vidguide::orchestrator::{run_task, RunConfig, TaskInput, TaskLevel, Transcript};
use vidguide::video::KeyframeSet;

use super::{demo_dir, solid_keys};

pub fn decision(op: &str) -> String {
    json!({"Thought": "scripted", "Operation": op, "Summary": format!("do {op}")}).to_string()
}

pub const PASS: &str = "The operation fits the recording.\nTrue";

pub fn at_frame(frame: usize) -> String {
    json!({"Thought": "scripted", "Frame": frame, "Analysis": null, "Need_Back": false}).to_string()
}

pub fn off_track(need_back: bool) -> String {
    json!({"Thought": "scripted", "Frame": 0, "Analysis": "wrong page", "Need_Back": need_back}).to_string()
}

/// Screen `a` scrolls onto itself and opens `b`, which has no way back.
pub const LOOP_GRAPH: &str = r#"
initial = "a"
home = "a"

[screens.a]
title = "A"
elements = [{ id = 1, bounds = [20, 80, 170, 160], text = "Go" }]
[screens.a.transitions]
"Scroll (down)" = "a"
"Back" = "a"
"Click (1)" = "b"

[screens.b]
title = "B"
"#;

pub fn loop_graph() -> UiGraph {
    parse_ui_graph(LOOP_GRAPH, "loop").unwrap()
}

pub fn task() -> TaskInput {
    TaskInput { id: "scripted".into(), video_instruction: "scroll the list".into(), user_instruction: "scroll the list".into() }
}

pub fn four_keys() -> KeyframeSet {
    solid_keys(&[[200, 0, 0], [0, 200, 0], [0, 0, 200], [200, 200, 0]])
}

pub fn run_loop(backend: &ScriptedBackend, keys: &KeyframeSet, config: &RunConfig) -> Transcript {
    let mut device = SimDevice::new(loop_graph());
    run_task(keys, &task(), &mut device, backend, config).unwrap()
}

/// Scrolls forever; the video agent always reports the first tile.
pub fn endless_scroll() -> ScriptedBackend {
    ScriptedBackend::new()
        .with_default(AgentRole::Decision, decision("Scroll (down)"))
        .with_default(AgentRole::Reflection, PASS)
        .with_default(AgentRole::Video, at_frame(1))
}

pub fn step_limit_run(level: TaskLevel) -> Transcript {
    run_loop(&endless_scroll(), &four_keys(), &RunConfig::for_level(level))
}

/// `Done` proposed right after `actions` scrolls.
pub fn done_after(actions: usize, level: TaskLevel) -> Transcript {
    let backend = endless_scroll().with(AgentRole::Decision, actions + 1, decision("Done"));
    run_loop(&backend, &four_keys(), &RunConfig::for_level(level))
}

pub fn exploration_limit_run(max_explorations: usize) -> Transcript {
    let config = RunConfig { max_explorations: Some(max_explorations), ..RunConfig::for_level(TaskLevel::Basic) };
    run_loop(&endless_scroll(), &four_keys(), &config)
}

pub fn agent_failure_run() -> Transcript {
    let backend = ScriptedBackend::new().with_default(AgentRole::Decision, "I am not sure what to do here.");
    run_loop(&backend, &four_keys(), &RunConfig::default())
}

/// Opens `b`, is told it left the path, and the recovery `Back` has nowhere
/// to go.
pub fn dead_end_back_run() -> Transcript {
    let backend = ScriptedBackend::new()
        .with_default(AgentRole::Decision, decision("Click (1)"))
        .with_default(AgentRole::Reflection, PASS)
        .with(AgentRole::Video, 1, off_track(true));
    run_loop(&backend, &four_keys(), &RunConfig::default())
}

pub struct DemoTask {
    pub spec: TaskSpec,
    pub graph: UiGraph,
    pub keys: KeyframeSet,
}

pub fn demo_task(id: &str) -> DemoTask {
    let spec = TaskSpec::load(&demo_dir().join("tasks").join(format!("{id}.toml"))).unwrap();
    let graph = spec.load_graph().unwrap();
    let keys = spec.load_keyframes(Some(&graph)).unwrap();
    DemoTask { spec, graph, keys }
}

impl DemoTask {
    pub fn run(&self) -> Transcript {
        let backend = ScriptedBackend::from_jsonl(&self.spec.fixtures_path().unwrap()).unwrap();
        let mut device = SimDevice::new(self.graph.clone());
        run_task(&self.keys, &self.spec.input(), &mut device, &backend, &RunConfig::for_level(self.spec.level)).unwrap()
    }
}

/// A randomized scripted run over a self-looping screen. Returns the run
/// and the window starts the advance rule predicts for each iteration.
pub struct RandomRun {
    pub transcript: Transcript,
    pub expected_starts: Vec<usize>,
    pub keyframes: usize,
}

pub fn random_run(rng: &mut ChaCha8Rng, with_off_track: bool) -> RandomRun {
    let n = rng.gen_range(1..=12);
    let colors: Vec<[u8; 3]> = (0..n).map(|i| [(i * 20) as u8, 100, 200]).collect();
    let keys = solid_keys(&colors);
    let width = rng.gen_range(1..=5);
    let actions = rng.gen_range(1..=9);

    let mut backend = ScriptedBackend::new()
        .with_default(AgentRole::Decision, decision("Scroll (down)"))
        .with_default(AgentRole::Reflection, PASS);
    let mut expected = Vec::new();
    let mut start = 1usize;
    let mut iteration = 0;
    for _ in 0..actions {
        iteration += 1;
        expected.push(start);
        let tiles = width.min(n - start + 1);
        if with_off_track && rng.gen_bool(0.3) {
            let need_back = rng.gen_bool(0.5);
            backend = backend.with(AgentRole::Video, iteration, off_track(need_back));
            if need_back {
                iteration += 1;
                expected.push(start);
            }
        } else {
            let f = rng.gen_range(1..=tiles);
            backend = backend.with(AgentRole::Video, iteration, at_frame(f));
            start = (start + f - 1).clamp(1, n);
        }
    }
    iteration += 1;
    expected.push(start);
    backend = backend.with(AgentRole::Decision, iteration, decision("Done"));

    let config = RunConfig {
        window_width: width,
        max_explorations: Some(iteration),
        ..RunConfig::for_level(TaskLevel::Advanced)
    };
    RandomRun { transcript: run_loop(&backend, &keys, &config), expected_starts: expected, keyframes: n }
}

impl RandomRun {
    /// Problems with window movement, empty when the run behaved.
    pub fn window_problems(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let records = &self.transcript.records;
        let starts: Vec<usize> = records.iter().map(|r| r.window_start).collect();
        if starts != self.expected_starts {
            bad.push(format!("starts {starts:?}, predicted {:?}", self.expected_starts));
        }
        for pair in records.windows(2) {
            if pair[1].window_start < pair[0].window_start {
                bad.push(format!("start moved back at iteration {}", pair[1].iteration));
            }
        }
        for r in records {
            if r.window_start < 1 || r.window_start > self.keyframes {
                bad.push(format!("start {} outside 1..={}", r.window_start, self.keyframes));
            }
            let frozen = r.recovery || r.location.as_ref().is_some_and(|l| l.frame == 0);
            if frozen && r.next_start != r.window_start {
                bad.push(format!("start moved during recovery at iteration {}", r.iteration));
            }
        }
        if self.transcript.status() != vidguide::orchestrator::TerminalStatus::Done {
            bad.push(format!("ended {}", self.transcript.status()));
        }
        bad
    }
}
