use image::RgbImage;

use super::similarity::{check_shape, luma_plane, plane_change};
use super::{Frame, KeyframeSet, PipelineConfig, Result, VideoError};

/// Random-access source of decoded frames, positions `0..len()`.
pub trait FrameSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn frame(&self, index: usize) -> Result<RgbImage>;

    fn source_id(&self) -> String {
        "memory".to_string()
    }
}

impl FrameSource for [RgbImage] {
    fn len(&self) -> usize {
        <[RgbImage]>::len(self)
    }

    fn frame(&self, index: usize) -> Result<RgbImage> {
        Ok(self[index].clone())
    }
}

impl FrameSource for Vec<RgbImage> {
    fn len(&self) -> usize {
        Vec::len(self)
    }

    fn frame(&self, index: usize) -> Result<RgbImage> {
        Ok(self[index].clone())
    }
}

/// Frames at positions `0, stride, 2*stride, ...`. Only sampled frames are
/// decoded.
pub fn uniform_sample<S: FrameSource + ?Sized>(video: &S, stride: usize) -> Result<Vec<Frame>> {
    if stride < 1 {
        return Err(VideoError::Config("sample stride must be >= 1".into()));
    }
    if video.is_empty() {
        return Err(VideoError::EmptyInput);
    }
    (0..video.len())
        .step_by(stride)
        .map(|i| Frame::new(i, video.frame(i)?))
        .collect()
}

/// Sequential redundancy filter: the first frame is kept, and each later frame
/// is kept when it differs from the last *kept* frame in at least
/// `change_threshold` of its pixels.
pub fn filter_by_change(frames: Vec<Frame>, change_threshold: f64) -> Result<Vec<Frame>> {
    if !(0.0..=1.0).contains(&change_threshold) {
        return Err(VideoError::Config(format!(
            "change_threshold must lie in [0, 1], got {change_threshold}"
        )));
    }
    let mut kept: Vec<Frame> = Vec::new();
    let mut reference: Option<Vec<u8>> = None;
    for frame in frames {
        let plane = luma_plane(&frame.image);
        match (&reference, kept.last()) {
            (Some(prev), Some(prev_frame)) => {
                check_shape(&prev_frame.image, &frame.image)?;
                if plane_change(prev, &plane) >= change_threshold {
                    reference = Some(plane);
                    kept.push(frame);
                }
            }
            _ => {
                reference = Some(plane);
                kept.push(frame);
            }
        }
    }
    Ok(kept)
}

/// Greedy temporal-gap filter: keeps a frame when its index is at least
/// `min_gap` past the last kept index. The first frame is always kept.
pub fn filter_by_gap(frames: Vec<Frame>, min_gap: usize) -> Vec<Frame> {
    let mut kept: Vec<Frame> = Vec::with_capacity(frames.len());
    for frame in frames {
        match kept.last() {
            Some(last) if frame.index < last.index + min_gap => {}
            _ => kept.push(frame),
        }
    }
    kept
}

/// Uniform sampling, change filtering and gap filtering, in that order.
pub fn extract_keyframes<S: FrameSource + ?Sized>(
    video: &S,
    config: &PipelineConfig,
) -> Result<KeyframeSet> {
    config.validate()?;
    let sampled = uniform_sample(video, config.sample_stride)?;
    let changed = filter_by_change(sampled, config.change_threshold)?;
    let frames = filter_by_gap(changed, config.min_gap);
    KeyframeSet::new(video.source_id(), frames)
}
