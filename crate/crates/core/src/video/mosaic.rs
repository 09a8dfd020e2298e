use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};

use super::{KeyframeSet, Result, VideoError};
use crate::render;

const LABEL_FG: Rgb<u8> = Rgb([255, 255, 255]);
const LABEL_BG: Rgb<u8> = Rgb([0, 0, 0]);
const TERMINAL_COLOR: Rgb<u8> = Rgb([230, 20, 20]);
const GUTTER_COLOR: Rgb<u8> = Rgb([48, 48, 48]);

/// Layout knobs for mosaics. Defaults keep source resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosaicStyle {
    /// Scale every tile to this height; `None` uses the tallest frame.
    pub tile_height: Option<u32>,
    /// Gutter between tiles, in pixels.
    pub spacing: u32,
}

impl Default for MosaicStyle {
    fn default() -> Self {
        Self {
            tile_height: None,
            spacing: 8,
        }
    }
}

/// A single-row composite of consecutive keyframes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mosaic {
    pub image: RgbImage,
    /// Window-relative labels, `frame-1` .. `frame-n`.
    pub frame_labels: Vec<String>,
    /// 1-based keyframe positions shown, left to right.
    pub absolute_indices: Vec<usize>,
    /// Source-recording frame indices of the tiles.
    pub source_indices: Vec<usize>,
    /// True when the final keyframe of the whole set is among the tiles.
    pub terminal_marked: bool,
}

impl Mosaic {
    pub fn tile_count(&self) -> usize {
        self.frame_labels.len()
    }

    /// Inclusive 1-based span of keyframe positions shown.
    pub fn span(&self) -> (usize, usize) {
        (
            *self.absolute_indices.first().unwrap_or(&0),
            *self.absolute_indices.last().unwrap_or(&0),
        )
    }
}

pub fn build_mosaic(keys: &KeyframeSet, start: usize, width: usize) -> Result<Mosaic> {
    build_mosaic_with(keys, start, width, &MosaicStyle::default())
}

/// Tiles keyframes `start ..= min(start + width - 1, len)` (1-based) in one row.
pub fn build_mosaic_with(
    keys: &KeyframeSet,
    start: usize,
    width: usize,
    style: &MosaicStyle,
) -> Result<Mosaic> {
    let len = keys.len();
    if start < 1 || start > len {
        return Err(VideoError::Range { start, len });
    }
    if width < 1 {
        return Err(VideoError::Config("window width must be >= 1".into()));
    }
    let end = (start + width - 1).min(len);
    let positions: Vec<usize> = (start..=end).collect();
    let frames: Vec<_> = positions.iter().map(|&p| keys.get(p).expect("in range")).collect();

    let tile_h = style
        .tile_height
        .unwrap_or_else(|| frames.iter().map(|f| f.height()).max().unwrap_or(1))
        .max(1);
    let tiles: Vec<RgbImage> = frames
        .iter()
        .map(|f| {
            if f.height() == tile_h {
                f.image.clone()
            } else {
                let w = ((f.width() as u64 * tile_h as u64) / f.height() as u64).max(1) as u32;
                imageops::resize(&f.image, w, tile_h, FilterType::Triangle)
            }
        })
        .collect();

    let total_w: u32 =
        tiles.iter().map(|t| t.width()).sum::<u32>() + style.spacing * (tiles.len() as u32 - 1);
    let mut canvas = RgbImage::from_pixel(total_w, tile_h, GUTTER_COLOR);
    let terminal_marked = end == len;
    let mut labels = Vec::with_capacity(tiles.len());
    let mut x: i64 = 0;
    for (i, tile) in tiles.iter().enumerate() {
        imageops::replace(&mut canvas, tile, x, 0);
        let scale = (tile_h / 160).max(1);
        let label = format!("frame-{}", i + 1);
        render::draw_label(&mut canvas, x, 0, &label, scale, LABEL_FG, LABEL_BG);
        if terminal_marked && i + 1 == tiles.len() {
            let thickness = (tile.width().min(tile_h) / 40).max(3);
            render::stroke_rect(&mut canvas, x, 0, tile.width(), tile_h, thickness, TERMINAL_COLOR);
            let banner_h = render::text_height(scale) + 4 * scale;
            render::draw_label(
                &mut canvas,
                x + thickness as i64,
                tile_h as i64 - banner_h as i64 - thickness as i64,
                "END",
                scale,
                LABEL_FG,
                TERMINAL_COLOR,
            );
        }
        labels.push(label);
        x += tile.width() as i64 + style.spacing as i64;
    }

    Ok(Mosaic {
        image: canvas,
        frame_labels: labels,
        source_indices: frames.iter().map(|f| f.index).collect(),
        absolute_indices: positions,
        terminal_marked,
    })
}
