//! Hexcone HSV and BT.601 YCbCr conversions.

use super::buffer::ImageBuffer;

/// HSV raster: interleaved `(h, s, v)` with hue as a fraction of a turn in `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HsvBuffer {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

pub fn rgb_to_hsv_pixel(rgb: [f32; 3]) -> [f32; 3] {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let h = if h >= 1.0 { 0.0 } else { h };
    [h as f32, s as f32, v as f32]
}

pub fn hsv_to_rgb_pixel(hsv: [f32; 3]) -> [f32; 3] {
    let [h, s, v] = hsv.map(f64::from);
    if s <= 0.0 {
        return [v as f32; 3];
    }
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = (h6.floor() as i64).rem_euclid(6);
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r as f32, g as f32, b as f32]
}

pub fn rgb_to_hsv(img: &ImageBuffer) -> HsvBuffer {
    let data = img.data().chunks_exact(3).flat_map(|p| rgb_to_hsv_pixel([p[0], p[1], p[2]])).collect();
    HsvBuffer { width: img.width(), height: img.height(), data }
}

/// Inverse of [`rgb_to_hsv`]; saturation and value are clamped to `[0, 1]`.
pub fn hsv_to_rgb(hsv: &HsvBuffer) -> ImageBuffer {
    let data = hsv
        .data
        .chunks_exact(3)
        .flat_map(|p| hsv_to_rgb_pixel([p[0], p[1].clamp(0.0, 1.0), p[2].clamp(0.0, 1.0)]))
        .collect();
    ImageBuffer::from_raw_clamped(hsv.width, hsv.height, data)
}

pub(crate) fn rgb_to_ycbcr(p: [f32; 3]) -> [f64; 3] {
    let [r, g, b] = p.map(f64::from);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    [y, (b - y) * 0.564, (r - y) * 0.713]
}

pub(crate) fn ycbcr_to_rgb(p: [f64; 3]) -> [f32; 3] {
    let [y, cb, cr] = p;
    let r = y + cr / 0.713;
    let b = y + cb / 0.564;
    let g = (y - 0.299 * r - 0.114 * b) / 0.587;
    [r as f32, g as f32, b as f32]
}
