use serde::{Deserialize, Serialize};

use crate::agent::VideoLocation;
use crate::video::{build_mosaic_with, KeyframeSet, Mosaic, MosaicStyle, Result, VideoError};

pub const DEFAULT_WINDOW_WIDTH: usize = 4;

/// The span of keyframes shown to the agents: `start ..= start + width - 1`,
/// clipped at the end of the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlidingWindow {
    /// 1-based keyframe position of the window head.
    pub start: usize,
    pub width: usize,
}

impl SlidingWindow {
    pub fn new(start: usize, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(VideoError::Config("window width must be at least 1".into()));
        }
        if start == 0 {
            return Err(VideoError::Config("window start is 1-based".into()));
        }
        Ok(Self { start, width })
    }

    pub fn head(width: usize) -> Result<Self> {
        Self::new(1, width)
    }

    /// Inclusive 1-based span for a set of `len` keyframes.
    pub fn span(&self, len: usize) -> (usize, usize) {
        (self.start, (self.start + self.width - 1).min(len))
    }
}

pub fn window_slice(keys: &KeyframeSet, window: SlidingWindow) -> Result<Mosaic> {
    window_slice_with(keys, window, &MosaicStyle::default())
}

pub fn window_slice_with(keys: &KeyframeSet, window: SlidingWindow, style: &MosaicStyle) -> Result<Mosaic> {
    build_mosaic_with(keys, window.start, window.width, style)
}

/// Moves the window so the anchored frame becomes the new head, shifted by
/// `offset`. Clamped to the keyframe set; frame 0 leaves the window alone.
pub fn advance(current: SlidingWindow, loc: &VideoLocation, keys: &KeyframeSet, offset: i64) -> SlidingWindow {
    if loc.frame == 0 {
        return current;
    }
    let target = current.start as i64 + loc.frame as i64 - 1 + offset;
    let start = target.clamp(1, keys.len().max(1) as i64) as usize;
    SlidingWindow { start, ..current }
}
