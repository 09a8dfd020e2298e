use image::{Rgb, RgbImage};

use super::UiElement;
use crate::render::{draw_label, stroke_rect, text_height, text_width};

const PALETTE: [Rgb<u8>; 6] = [
    Rgb([220, 30, 30]),
    Rgb([20, 120, 220]),
    Rgb([20, 160, 60]),
    Rgb([200, 120, 0]),
    Rgb([150, 40, 190]),
    Rgb([0, 150, 150]),
];

fn badge_scale(img: &RgbImage) -> u32 {
    (img.width().min(img.height()) / 300).max(1)
}

/// Draws a numbered box per element: outline plus the mark id in badges at
/// the box's top-left and bottom-right corners.
pub fn annotate(screen: &RgbImage, elements: &[UiElement]) -> RgbImage {
    let mut img = screen.clone();
    let scale = badge_scale(&img);
    for e in elements {
        let b = e.bounds;
        if b.is_empty() {
            continue;
        }
        let color = PALETTE[(e.mark_id as usize).wrapping_sub(1) % PALETTE.len()];
        stroke_rect(
            &mut img,
            b.left as i64,
            b.top as i64,
            b.width() as u32,
            b.height() as u32,
            scale,
            color,
        );
        let label = e.mark_id.to_string();
        let fg = Rgb([255, 255, 255]);
        draw_label(&mut img, b.left as i64, b.top as i64, &label, scale, fg, color);
        let pad = 2 * scale;
        let w = (text_width(&label, scale) + 2 * pad) as i64;
        let h = (text_height(scale) + 2 * pad) as i64;
        draw_label(&mut img, b.right as i64 - w, b.bottom as i64 - h, &label, scale, fg, color);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Rect;

    #[test]
    fn badges_change_pixels_inside_boxes_only() {
        let screen = RgbImage::from_pixel(100, 100, Rgb([250, 250, 250]));
        let e = UiElement {
            mark_id: 1,
            bounds: Rect::from([10, 10, 60, 40]),
            text: None,
            clickable: true,
        };
        let out = annotate(&screen, &[e]);
        assert_ne!(out, screen);
        assert_eq!(out.get_pixel(10, 10), &PALETTE[0]);
        assert_eq!(out.get_pixel(59, 39), &PALETTE[0]);
        assert_eq!(out.get_pixel(80, 80), screen.get_pixel(80, 80));
        assert_eq!(annotate(&screen, &[]), screen);
    }
}
