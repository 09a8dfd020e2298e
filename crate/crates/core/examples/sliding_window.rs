//! Moves the keyframe window the way the video agent's answers would.

use image::{Rgb, RgbImage};
use vidguide::agent::VideoLocation;
use vidguide::orchestrator::{advance, window_slice, SlidingWindow, DEFAULT_WINDOW_WIDTH};
use vidguide::video::{Frame, KeyframeSet};

fn location(frame: usize) -> VideoLocation {
    VideoLocation { thought: String::new(), frame, analysis: None, need_back: false }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frames = (0..7)
        .map(|i| Frame::new(i * 30, RgbImage::from_pixel(90, 160, Rgb([30 * i as u8, 90, 160]))))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = KeyframeSet::new("gradient", frames)?;

    let mut window = SlidingWindow::head(DEFAULT_WINDOW_WIDTH)?;
    // Answers the video agent might give; 0 means off the demonstrated path.
    for frame in [2, 1, 3, 0, 2, 4] {
        let mosaic = window_slice(&keys, window)?;
        let next = advance(window, &location(frame), &keys, 0);
        println!(
            "window {:?} (terminal shown: {}), device at frame-{frame} -> next start {}",
            mosaic.span(),
            mosaic.terminal_marked,
            next.start
        );
        window = next;
    }
    Ok(())
}
