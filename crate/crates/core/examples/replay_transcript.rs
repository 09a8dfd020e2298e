//! Runs a task with an off-track detour, saves its transcript and prints the
//! replay view the `replay` command shows.

use std::path::Path;

use vidguide::agent::ScriptedBackend;
use vidguide::cli::render_replay;
use vidguide::device::SimDevice;
use vidguide::eval::TaskSpec;
use vidguide::orchestrator::{run_task, RunConfig, Transcript};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("demo");
    let spec = TaskSpec::load(&demo.join("tasks/dark_mode.toml"))?;
    let graph = spec.load_graph()?;
    let keys = spec.load_keyframes(Some(&graph))?;
    let backend = ScriptedBackend::from_jsonl(&spec.fixtures_path().expect("task names its fixtures"))?;
    let transcript = run_task(&keys, &spec.input(), &mut SimDevice::new(graph), &backend, &RunConfig::for_level(spec.level))?;

    let path = std::env::temp_dir().join("vidguide_dark_mode.jsonl");
    transcript.write(&path)?;
    println!("{}", render_replay(&Transcript::read(&path)?));
    Ok(())
}
