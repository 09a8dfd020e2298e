//! Renders a demonstration from a UI graph, extracts its keyframes and saves
//! a preview mosaic.

use std::path::Path;

use vidguide::device::{load_ui_graph, render_demonstration};
use vidguide::video::{build_mosaic, extract_keyframes, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("demo");
    let graph = load_ui_graph(&demo.join("graphs/settings.toml"))?;
    let path: Vec<String> = ["home", "settings", "display", "display_dark"].map(String::from).to_vec();
    let video = render_demonstration(&graph, &path, 30)?;

    let config = PipelineConfig::default();
    let keys = extract_keyframes(&video, &config)?;
    println!("{} frames -> {} keyframes at {:?}", video.len(), keys.len(), keys.indices());

    let preview = build_mosaic(&keys, 1, keys.len())?;
    let out = std::env::temp_dir().join("vidguide_keyframes.png");
    preview.image.save(&out)?;
    println!("labels {:?}, saved {}", preview.frame_labels, out.display());
    Ok(())
}
