use image::{Rgb, RgbImage};

use super::{Frame, Result, VideoError};

/// Integer-truncated ITU-R 601 luma.
#[inline]
pub fn luma(px: Rgb<u8>) -> u8 {
    let [r, g, b] = px.0;
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32) / 1000) as u8
}

pub fn luma_plane(image: &RgbImage) -> Vec<u8> {
    image.pixels().map(|p| luma(*p)).collect()
}

pub(crate) fn check_shape(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(VideoError::Shape {
            a_w: a.width(),
            a_h: a.height(),
            b_w: b.width(),
            b_h: b.height(),
        });
    }
    Ok(())
}

pub(crate) fn plane_change(a: &[u8], b: &[u8]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let changed = a.iter().zip(b).filter(|(x, y)| x != y).count();
    changed as f64 / a.len() as f64
}

/// Fraction of pixels whose grayscale value differs between `a` and `b`.
///
/// This is the count of nonzero entries in the absolute grayscale difference,
/// divided by the pixel count.
pub fn change_fraction(a: &Frame, b: &Frame) -> Result<f64> {
    check_shape(&a.image, &b.image)?;
    Ok(plane_change(&luma_plane(&a.image), &luma_plane(&b.image)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(w: u32, h: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> Frame {
        Frame::new(0, RgbImage::from_fn(w, h, |x, y| Rgb(f(x, y)))).unwrap()
    }

    #[test]
    fn luma_matches_integer_formula() {
        assert_eq!(luma(Rgb([255, 255, 255])), 255);
        assert_eq!(luma(Rgb([0, 0, 0])), 0);
        // 299*10 + 587*20 + 114*30 = 18150 -> 18
        assert_eq!(luma(Rgb([10, 20, 30])), 18);
        assert_eq!(luma(Rgb([255, 0, 0])), 76);
    }

    #[test]
    fn identical_frames_do_not_change() {
        let a = frame(8, 6, |x, y| [x as u8 * 20, y as u8 * 30, 7]);
        assert_eq!(change_fraction(&a, &a.clone()).unwrap(), 0.0);
    }

    #[test]
    fn inverse_changes_everything() {
        // Gray pixels: luma(c) = c, luma(255 - c) = 255 - c, never equal.
        let a = frame(16, 16, |x, y| {
            let c = ((x * 16 + y) % 256) as u8;
            [c, c, c]
        });
        let inv = frame(16, 16, |x, y| {
            let c = 255 - ((x * 16 + y) % 256) as u8;
            [c, c, c]
        });
        assert_eq!(change_fraction(&a, &inv).unwrap(), 1.0);
    }

    #[test]
    fn left_half_change_is_one_half() {
        let a = frame(10, 7, |_, _| [40, 40, 40]);
        let b = frame(10, 7, |x, _| if x < 5 { [200, 200, 200] } else { [40, 40, 40] });
        assert_eq!(change_fraction(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn color_change_with_equal_luma_is_not_counted() {
        // Both pixels map to luma 29.
        let a = frame(2, 2, |_, _| [0, 0, 255]);
        let b = frame(2, 2, |_, _| [97, 0, 0]);
        assert_eq!(luma(Rgb([0, 0, 255])), luma(Rgb([97, 0, 0])));
        assert_eq!(change_fraction(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = frame(3, 3, |_, _| [0, 0, 0]);
        let b = frame(3, 4, |_, _| [0, 0, 0]);
        assert!(matches!(change_fraction(&a, &b), Err(VideoError::Shape { .. })));
    }
}
