mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidguide::agent::{Action, AgentRole};
use vidguide::orchestrator::{RunConfig, TaskLevel, TerminalStatus, Transcript};

use common::scenarios::{self, at_frame, decision, endless_scroll, four_keys, run_loop};

#[test]
fn each_terminal_status_is_reachable() {
    let t = scenarios::done_after(3, TaskLevel::Basic);
    assert_eq!((t.status(), t.summary.device_actions), (TerminalStatus::Done, 3));

    let t = scenarios::step_limit_run(TaskLevel::Normal);
    assert_eq!((t.status(), t.summary.device_actions), (TerminalStatus::StepLimit, 15));
    // The over-limit proposal is recorded but never executed.
    let last = t.records.last().unwrap();
    assert!(last.decision.is_some() && last.executed.is_none());

    let t = scenarios::exploration_limit_run(4);
    assert_eq!((t.status(), t.summary.iterations), (TerminalStatus::ExplorationLimit, 4));

    let t = scenarios::agent_failure_run();
    assert_eq!(t.status(), TerminalStatus::AgentFailure);
    assert_eq!(t.records[0].model_calls, 3);

    let t = scenarios::dead_end_back_run();
    assert_eq!(t.status(), TerminalStatus::GroundingFailure);
    assert!(t.records[1].recovery);
}

#[test]
fn done_right_after_the_last_allowed_action_counts() {
    for level in TaskLevel::ALL {
        let t = scenarios::done_after(level.step_limit(), level);
        assert_eq!(t.status(), TerminalStatus::Done, "{level}");
        assert_eq!(t.summary.device_actions, level.step_limit());
    }
}

#[test]
fn reflection_may_replace_the_proposal_with_done() {
    let backend = endless_scroll().with(
        AgentRole::Reflection,
        2,
        "The recording ends here.\n{\"Thought\": \"finished\", \"Operation\": \"Done\", \"Summary\": \"stop\"}",
    );
    let t = run_loop(&backend, &four_keys(), &RunConfig::default());
    assert_eq!(t.status(), TerminalStatus::Done);
    assert_eq!(t.summary.device_actions, 1);
    assert!(t.records[1].was_refined());
}

#[test]
fn frame_outside_the_window_is_re_asked() {
    let backend = endless_scroll()
        .with(AgentRole::Video, 1, at_frame(9))
        .with(AgentRole::Video, 1, at_frame(2))
        .with(AgentRole::Decision, 2, decision("Done"));
    let t = run_loop(&backend, &four_keys(), &RunConfig::default());
    assert_eq!(t.status(), TerminalStatus::Done);
    assert_eq!(t.records[0].location.as_ref().unwrap().frame, 2);
    assert_eq!(t.records[0].next_start, 2);
    // decision + reflection + two video attempts
    assert_eq!(t.records[0].model_calls, 4);
}

#[test]
fn off_track_without_back_only_advises() {
    let backend = endless_scroll()
        .with(AgentRole::Video, 1, scenarios::off_track(false))
        .with(AgentRole::Decision, 3, decision("Done"));
    let t = run_loop(&backend, &four_keys(), &RunConfig::default());
    assert_eq!(t.status(), TerminalStatus::Done);
    assert!(t.records.iter().all(|r| !r.recovery));
    assert_eq!(t.records[0].next_start, 1);
}

#[test]
fn contact_card_transcript_round_trips() {
    let demo = scenarios::demo_task("contact_card");
    let t = demo.run();
    assert_eq!(t.status(), TerminalStatus::Done);
    assert_eq!(t.refined_steps(), vec![7]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    t.write(&path).unwrap();
    let back = Transcript::read(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(demo.run().canonical_jsonl(), t.canonical_jsonl());
}

#[test]
fn artifacts_are_saved_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let backend = endless_scroll().with(AgentRole::Decision, 2, decision("Done"));
    let config = RunConfig { artifact_dir: Some(dir.path().to_path_buf()), ..RunConfig::default() };
    let t = run_loop(&backend, &four_keys(), &config);
    assert_eq!(t.status(), TerminalStatus::Done);
    for name in ["step01_window.png", "step01_before.png", "step01_after.png", "step02_window.png"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert_eq!(t.records[0].before.as_deref(), Some(dir.path().join("step01_before.png").as_path()));
}

#[test]
fn randomized_windows_follow_the_advance_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for with_off_track in [false, true] {
        for _ in 0..10 {
            let r = scenarios::random_run(&mut rng, with_off_track);
            let bad = r.window_problems();
            assert!(bad.is_empty(), "{}", bad.join("\n"));
        }
    }
}

#[test]
fn recovery_back_skips_the_agents() {
    let backend = endless_scroll()
        .with(AgentRole::Video, 1, scenarios::off_track(true))
        .with(AgentRole::Decision, 3, decision("Done"));
    let t = run_loop(&backend, &four_keys(), &RunConfig::default());
    let r = &t.records[1];
    assert!(r.recovery);
    assert_eq!(r.executed, Some(Action::Back));
    assert_eq!(r.model_calls, 0);
    assert!(r.decision.is_none());
    assert_eq!(t.status(), TerminalStatus::Done);
}
