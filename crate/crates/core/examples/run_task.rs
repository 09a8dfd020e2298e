//! Runs the contact-card task against scripted responses and prints each
//! iteration, including the step reflection corrected.

use std::path::Path;

use vidguide::agent::ScriptedBackend;
use vidguide::device::SimDevice;
use vidguide::eval::TaskSpec;
use vidguide::orchestrator::{run_task, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("demo");
    let spec = TaskSpec::load(&demo.join("tasks/contact_card.toml"))?;
    let graph = spec.load_graph()?;
    let keys = spec.load_keyframes(Some(&graph))?;
    let backend = ScriptedBackend::from_jsonl(&spec.fixtures_path().expect("task names its fixtures"))?;
    let mut device = SimDevice::new(graph);

    let transcript = run_task(&keys, &spec.input(), &mut device, &backend, &RunConfig::for_level(spec.level))?;
    for r in &transcript.records {
        let proposed = r.proposed().map(ToString::to_string).unwrap_or_else(|| "-".into());
        let executed = r.executed.as_ref().map(ToString::to_string).unwrap_or_else(|| "-".into());
        let mark = if r.was_refined() { "  <- refined" } else { "" };
        println!("step {:>2}  window {:>2}  proposed {proposed:<16} executed {executed:<16}{mark}", r.iteration, r.window_start);
    }
    println!("status {} after {} device actions", transcript.status(), transcript.summary.device_actions);
    Ok(())
}
