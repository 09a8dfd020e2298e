//! Walks the simulated messages app and saves a Set-of-Mark screenshot.

use std::path::Path;

use vidguide::agent::{parse_action, Action};
use vidguide::device::{load_ui_graph, Device, SimDevice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("demo");
    let mut device = SimDevice::new(load_ui_graph(&demo.join("graphs/messages.toml"))?);

    for op in ["Click (1)", "Click (3)", "Type (987654)", "Click_text (+)"] {
        let action = parse_action(op)?;
        let state = device.execute(&action)?;
        println!("{:<16} -> {:<12} marks {:?}", action.to_string(), state.screen_id.as_deref().unwrap_or(""), state.mark_ids());
    }

    // Unknown marks are reported with what the screen actually offers.
    if let Err(e) = device.execute(&Action::Click { id: 42 }) {
        println!("rejected: {e}");
    }

    let out = std::env::temp_dir().join("vidguide_som.png");
    device.capture()?.screenshot.save(&out)?;
    println!("trail {:?}, saved {}", device.trail(), out.display());
    Ok(())
}
