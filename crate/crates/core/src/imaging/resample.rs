//! Resizing with nearest, bilinear and box (area-average) filters.
//!
//! Pixel centres sit at half-integer coordinates; both axes are processed
//! separably with `f64` weights.

use super::buffer::ImageBuffer;
use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Filter {
    Nearest,
    #[default]
    Bilinear,
    /// Exact area averaging; the right choice for downsampling.
    Box,
}

type AxisTaps = Vec<Vec<(usize, f64)>>;

fn axis_taps(filter: Filter, src: usize, dst: usize) -> AxisTaps {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| match filter {
            Filter::Nearest => {
                let s = (((i as f64 + 0.5) * scale).floor() as usize).min(src - 1);
                vec![(s, 1.0)]
            }
            Filter::Bilinear => {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let s0 = s.floor() as usize;
                let f = s - s0 as f64;
                if f == 0.0 || s0 + 1 >= src {
                    vec![(s0, 1.0)]
                } else {
                    vec![(s0, 1.0 - f), (s0 + 1, f)]
                }
            }
            Filter::Box => {
                let lo = i as f64 * scale;
                let hi = (i + 1) as f64 * scale;
                let first = lo.floor() as usize;
                let last = ((hi.ceil() as usize).max(first + 1)).min(src);
                let mut taps: Vec<(usize, f64)> = (first..last)
                    .map(|s| {
                        let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                        (s, overlap)
                    })
                    .filter(|&(_, w)| w > 0.0)
                    .collect();
                let total: f64 = taps.iter().map(|t| t.1).sum();
                for t in &mut taps {
                    t.1 /= total;
                }
                taps
            }
        })
        .collect()
}

/// Resizes `img` to `width`×`height`.
pub fn resample(img: &ImageBuffer, width: usize, height: usize, filter: Filter) -> Result<ImageBuffer> {
    if width == 0 || height == 0 {
        return param(format!("target size {width}x{height} must be at least 1x1"));
    }
    let (sw, sh) = img.dimensions();
    if (sw, sh) == (width, height) && filter == Filter::Nearest {
        return Ok(img.clone());
    }
    let xt = axis_taps(filter, sw, width);
    let yt = axis_taps(filter, sh, height);
    let src = img.data();

    let mut tmp = vec![0.0f64; width * sh * 3];
    for y in 0..sh {
        for (x, taps) in xt.iter().enumerate() {
            for c in 0..3 {
                tmp[(y * width + x) * 3 + c] =
                    taps.iter().map(|&(s, w)| w * f64::from(src[(y * sw + s) * 3 + c])).sum();
            }
        }
    }
    let mut out = vec![0.0f32; width * height * 3];
    for (y, taps) in yt.iter().enumerate() {
        for x in 0..width {
            for c in 0..3 {
                let v: f64 = taps.iter().map(|&(s, w)| w * tmp[(s * width + x) * 3 + c]).sum();
                out[(y * width + x) * 3 + c] = v as f32;
            }
        }
    }
    Ok(ImageBuffer::from_raw_clamped(width, height, out))
}
