//! Prints the decision, reflection and video requests for one step.

use image::{Rgb, RgbImage};
use vidguide::agent::{
    render_decision_prompt, render_reflection_prompt, render_video_prompt, Action, Decision, HistoryEntry,
};
use vidguide::video::{build_mosaic, Frame, KeyframeSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frames = (0..3)
        .map(|i| Frame::new(i * 30, RgbImage::from_pixel(90, 160, Rgb([60 * i as u8, 120, 200]))))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = KeyframeSet::new("demo", frames)?;
    let mosaic = build_mosaic(&keys, 1, 4)?;
    let screen = RgbImage::from_pixel(90, 160, Rgb([240, 240, 240]));
    let video_task = "Turn on dark mode in Settings.";
    let user_task = "Turn on dark mode.";

    let history = vec![
        HistoryEntry::Step("Open Settings".into()),
        HistoryEntry::Advisory("Sound was opened instead of Display.".into()),
    ];
    let decision = render_decision_prompt(&mosaic, &screen, video_task, user_task, &history)?;
    println!("--- decision ({} images) ---\n{}\n\n{}\n", decision.images.len(), decision.system, decision.user);

    let proposal = Decision {
        thought: "Display holds the theme switch.".into(),
        operation: Action::ClickText { text: "Display".into() },
        summary: "Open Display".into(),
    };
    let reflection = render_reflection_prompt(&mosaic, &screen, video_task, user_task, &proposal)?;
    println!("--- reflection ---\n{}\n", reflection.system);

    let video = render_video_prompt(&mosaic, &[screen.clone(), screen], video_task, user_task)?;
    println!("--- video ---\n{}\n\n{}", video.system, video.user);
    Ok(())
}
