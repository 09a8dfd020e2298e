mod common;

use std::fs;
use std::sync::Arc;

use vidguide::agent::{AgentRole, ScriptedBackend};
use vidguide::agent::Action;
use vidguide::device::{parse_ui_graph, SimDevice};
use vidguide::eval::{match_trajectory, run_suite, BackendChoice, EvalError, GoldStep, Suite, SuiteOptions};
use vidguide::orchestrator::{run_task, RunConfig};
use vidguide::orchestrator::TerminalStatus;

use common::demo_dir;
use common::scenarios::{at_frame, decision, demo_task, off_track, task, PASS};

fn demo_suite() -> Suite {
    Suite::load(&demo_dir().join("suite.toml")).unwrap()
}

#[test]
fn demo_suite_matches_hand_values() {
    let report = run_suite(&demo_suite(), &SuiteOptions::default()).unwrap();
    let m = report.metrics;
    assert_eq!(m.tasks, 6);
    assert!((m.sr - 4.0 / 6.0).abs() < 1e-9);
    assert!((m.cr - 16.0 / 18.0).abs() < 1e-9);
    assert!((m.da - 21.0 / 36.0).abs() < 1e-9);
    assert!((m.step - 6.0).abs() < 1e-9);
    assert!(report.agent_failures().is_empty());
    let table = report.table();
    assert!(table.contains("new_note") && table.contains("step_limit"));
    assert!(table.trim_end().ends_with("66.7    88.9    58.3    6.0"), "{table}");
}

#[test]
fn parallel_runs_give_the_same_report() {
    let suite = demo_suite();
    let serial = run_suite(&suite, &SuiteOptions::default()).unwrap();
    let parallel = run_suite(&suite, &SuiteOptions { parallel: 4, ..SuiteOptions::default() }).unwrap();
    assert_eq!(serial.tasks, parallel.tasks);
    assert_eq!(serial.metrics, parallel.metrics);
}

#[test]
fn transcripts_are_written_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let options = SuiteOptions { output_dir: Some(dir.path().to_path_buf()), ..SuiteOptions::default() };
    let report = run_suite(&demo_suite(), &options).unwrap();
    for row in &report.tasks {
        assert!(dir.path().join(&row.id).join("transcript.jsonl").exists(), "{}", row.id);
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["tasks"].as_array().unwrap().len(), 6);
}

#[test]
fn missing_inputs_fail_before_any_run() {
    let dir = tempfile::tempdir().unwrap();
    let task = |id: &str, graph: &str| {
        format!(
            "id = \"{id}\"\nlevel = \"basic\"\nvideo_instruction = \"v\"\nuser_instruction = \"u\"\n\
             ui_graph = \"{graph}\"\nfixtures = \"missing.jsonl\"\n[keyframes]\ndemonstration = [\"home\"]\n\
             [[gold]]\nany = [\"Back\"]\n"
        )
    };
    fs::write(dir.path().join("a.toml"), task("a", "nowhere.toml")).unwrap();
    fs::write(dir.path().join("b.toml"), task("a", "nowhere.toml")).unwrap();
    fs::write(dir.path().join("suite.toml"), "tasks = [\"a.toml\", \"b.toml\"]\n").unwrap();
    let suite = Suite::load(&dir.path().join("suite.toml")).unwrap();
    let Err(EvalError::SuiteConfig { problems }) = run_suite(&suite, &SuiteOptions::default()) else {
        panic!("expected a configuration error");
    };
    let all = problems.join("\n");
    assert!(all.contains("duplicate task id"), "{all}");
    assert!(all.contains("nowhere.toml") && all.contains("missing.jsonl"), "{all}");
}

#[test]
fn empty_suite_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("suite.toml"), "tasks = []\n").unwrap();
    let suite = Suite::load(&dir.path().join("suite.toml")).unwrap();
    assert!(matches!(run_suite(&suite, &SuiteOptions::default()), Err(EvalError::EmptySuite)));
}

#[test]
fn shared_backend_failures_are_reported_per_task() {
    let backend = ScriptedBackend::new().with_default(AgentRole::Decision, "no json here");
    let options = SuiteOptions { backend: BackendChoice::Shared(Arc::new(backend)), ..SuiteOptions::default() };
    let report = run_suite(&demo_suite(), &options).unwrap();
    assert_eq!(report.agent_failures().len(), 6);
    assert_eq!(report.metrics.da, 0.0);
    assert_eq!(report.metrics.sr, 0.0);
}

#[test]
fn extraneous_actions_void_success() {
    let demo = demo_task("call_number");
    let transcript = demo.run();
    let gold: Vec<GoldStep> = demo.spec.gold[..2].to_vec();
    let m = match_trajectory(&transcript, &gold);
    assert_eq!(m.depth, 2);
    assert!(!m.success);
    assert_eq!(m.correct, vec![true, true, false]);

    let full = match_trajectory(&transcript, &demo.spec.gold);
    assert!(full.success);
    assert_eq!(full.status, TerminalStatus::Done);
}

const CHAIN: &str = r#"
initial = "s0"
home = "s0"
[screens.s0]
title = "S0"
elements = [{ id = 1, bounds = [20, 80, 340, 140], text = "Next" }]
[screens.s0.transitions]
"Click (1)" = "s1"
[screens.s1]
title = "S1"
elements = [
  { id = 1, bounds = [20, 80, 340, 140], text = "Next" },
  { id = 2, bounds = [20, 160, 340, 220], text = "Elsewhere" },
]
[screens.s1.transitions]
"Click (1)" = "s2"
"Click (2)" = "wrong"
[screens.wrong]
title = "Wrong"
[screens.wrong.transitions]
"Back" = "s1"
[screens.s2]
title = "S2"
elements = [{ id = 1, bounds = [20, 80, 340, 140], text = "Next" }]
[screens.s2.transitions]
"Click (1)" = "s3"
[screens.s3]
title = "S3"
elements = [{ id = 1, bounds = [20, 80, 340, 140], text = "Next" }]
[screens.s3.transitions]
"Click (1)" = "s4"
[screens.s4]
title = "S4"
"#;

#[test]
fn recovered_divergence_still_succeeds() {
    let graph = parse_ui_graph(CHAIN, "chain").unwrap();
    let backend = ScriptedBackend::new()
        .with_default(AgentRole::Decision, decision("Click (1)"))
        .with(AgentRole::Decision, 2, decision("Click (2)"))
        .with(AgentRole::Decision, 7, decision("Done"))
        .with_default(AgentRole::Reflection, PASS)
        .with_default(AgentRole::Video, at_frame(1))
        .with(AgentRole::Video, 2, off_track(true));
    let keys = common::scenarios::four_keys();
    let t = run_task(&keys, &task(), &mut SimDevice::new(graph), &backend, &RunConfig::default()).unwrap();
    assert!(t.records[2].recovery);
    let gold: Vec<GoldStep> = (0..4).map(|_| GoldStep { any: vec![Action::Click { id: 1 }] }).collect();
    let m = match_trajectory(&t, &gold);
    assert_eq!(m.correct, vec![true, false, false, true, true, true]);
    assert_eq!(m.depth, 4);
    assert!(m.success);
}
