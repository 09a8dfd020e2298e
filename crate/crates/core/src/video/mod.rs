//! Keyframe extraction from screen recordings and indexed keyframe mosaics.
//!
//! A recording is sampled at a fixed stride, near-duplicate frames are dropped
//! by a pixel-change rule, and frames closer in time than a minimum gap are
//! removed. The surviving [`KeyframeSet`] is shown to agents a window at a time
//! through [`build_mosaic`].

mod io;
mod keyframes;
mod mosaic;
mod similarity;

use std::path::PathBuf;

use image::RgbImage;
use thiserror::Error;

pub use io::{read_manifest, write_keyframes, FrameDir, ManifestRecord};
pub use keyframes::{
    extract_keyframes, filter_by_change, filter_by_gap, uniform_sample, FrameSource,
};
pub use mosaic::{build_mosaic, build_mosaic_with, Mosaic, MosaicStyle};
pub use similarity::{change_fraction, luma, luma_plane};

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("video has no frames")]
    EmptyInput,
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("frame shapes differ: {a_w}x{a_h} vs {b_w}x{b_h}")]
    Shape { a_w: u32, a_h: u32, b_w: u32, b_h: u32 },
    #[error("frame must be non-empty, got {width}x{height}")]
    EmptyFrame { width: u32, height: u32 },
    #[error("window start {start} outside 1..={len}")]
    Range { start: usize, len: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}:{line}: {message}")]
    Manifest { path: PathBuf, line: usize, message: String },
}

pub type Result<T, E = VideoError> = std::result::Result<T, E>;

/// One decoded frame and its position in the source recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub image: RgbImage,
}

impl Frame {
    pub fn new(index: usize, image: RgbImage) -> Result<Self> {
        if image.width() == 0 || image.height() == 0 {
            return Err(VideoError::EmptyFrame {
                width: image.width(),
                height: image.height(),
            });
        }
        Ok(Self { index, image })
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

/// Parameters of the three extraction stages.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Source frames between uniform samples.
    pub sample_stride: usize,
    /// Fraction of pixels that must change for a sampled frame to be kept.
    pub change_threshold: f64,
    /// Minimum index distance between consecutive keyframes.
    pub min_gap: usize,
}

pub const DEFAULT_SAMPLE_STRIDE: usize = 15;

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_stride: DEFAULT_SAMPLE_STRIDE,
            change_threshold: 0.3,
            min_gap: DEFAULT_SAMPLE_STRIDE,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_stride < 1 {
            return Err(VideoError::Config("sample_stride must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.change_threshold) {
            return Err(VideoError::Config(format!(
                "change_threshold must lie in [0, 1], got {}",
                self.change_threshold
            )));
        }
        if self.min_gap < 1 {
            return Err(VideoError::Config("min_gap must be >= 1".into()));
        }
        Ok(())
    }
}

/// The keyframes surviving extraction, in recording order.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeSet {
    pub source_id: String,
    frames: Vec<Frame>,
}

impl KeyframeSet {
    /// Indices must be strictly increasing.
    pub fn new(source_id: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(VideoError::EmptyInput);
        }
        if let Some(w) = frames.windows(2).find(|w| w[1].index <= w[0].index) {
            return Err(VideoError::Config(format!(
                "keyframe indices must increase, found {} then {}",
                w[0].index, w[1].index
            )));
        }
        Ok(Self {
            source_id: source_id.into(),
            frames,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.index).collect()
    }

    /// 1-based access, matching window positions.
    pub fn get(&self, position: usize) -> Option<&Frame> {
        position.checked_sub(1).and_then(|p| self.frames.get(p))
    }
}
