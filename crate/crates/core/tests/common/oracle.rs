//! Brute-force reference versions of the keyframe stages, written pixel by
//! pixel and without sharing code with the library.

use image::RgbImage;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn gray(img: &RgbImage, x: u32, y: u32) -> u32 {
    let p = img.get_pixel(x, y).0;
    (299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32) / 1000
}

pub fn changed_fraction(a: &RgbImage, b: &RgbImage) -> f64 {
    let mut changed = 0u64;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if gray(a, x, y) != gray(b, x, y) {
                changed += 1;
            }
        }
    }
    changed as f64 / (a.width() as u64 * a.height() as u64) as f64
}

/// Indices of the frames surviving stride sampling, change filtering against
/// the last kept frame, and greedy gap filtering.
pub fn keyframe_indices(video: &[RgbImage], stride: usize, threshold: f64, min_gap: usize) -> Vec<usize> {
    let mut sampled = Vec::new();
    let mut i = 0;
    while i < video.len() {
        sampled.push(i);
        i += stride;
    }
    let mut changed: Vec<usize> = Vec::new();
    for &s in &sampled {
        let keep = match changed.last() {
            None => true,
            Some(&last) => changed_fraction(&video[last], &video[s]) >= threshold,
        };
        if keep {
            changed.push(s);
        }
    }
    let mut gapped: Vec<usize> = Vec::new();
    for &c in &changed {
        if gapped.last().is_none_or(|&last| c - last >= min_gap) {
            gapped.push(c);
        }
    }
    gapped
}

/// A recording where each frame repaints a few random blocks of the one
/// before it; some frames repeat unchanged.
pub fn random_video(rng: &mut ChaCha8Rng, len: usize, w: u32, h: u32) -> Vec<RgbImage> {
    let mut frame = RgbImage::from_fn(w, h, |_, _| image::Rgb([rng.gen(), rng.gen(), rng.gen()]));
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        if rng.gen_bool(0.4) {
            for _ in 0..rng.gen_range(1..=3) {
                let bw = rng.gen_range(1..=w);
                let bh = rng.gen_range(1..=h);
                let x0 = rng.gen_range(0..=w - bw);
                let y0 = rng.gen_range(0..=h - bh);
                let c = image::Rgb([rng.gen(), rng.gen(), rng.gen()]);
                for y in y0..y0 + bh {
                    for x in x0..x0 + bw {
                        frame.put_pixel(x, y, c);
                    }
                }
            }
        }
        out.push(frame.clone());
    }
    out
}
