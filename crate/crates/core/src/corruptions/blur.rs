//! Defocus, frosted-glass, motion, zoom and Gaussian blur.

use rand::Rng;

use crate::error::{param, Result};
use crate::imaging::{convolve2d, Boundary, ImageBuffer, Kernel2D, RandomStream};

#[derive(Clone, Debug, PartialEq)]
pub enum BlurParams {
    Defocus { radius: f64 },
    /// Gaussian blur, `iterations` rounds of local pixel swaps within
    /// `max_delta`, then a second Gaussian blur of the same σ.
    Glass { sigma: f64, max_delta: usize, iterations: usize },
    /// Line kernel; the angle is drawn from the stream unless given.
    Motion { length: f64, angle: Option<f64> },
    /// Mean of centre zooms at each factor.
    Zoom { factors: Vec<f64> },
    Gaussian { sigma: f64 },
}

impl BlurParams {
    /// Zoom factors `1, 1 + step, ...` up to and including `max_zoom`.
    pub fn zoom_ladder(max_zoom: f64, step: f64) -> BlurParams {
        let mut factors = vec![1.0];
        let mut i = 1;
        loop {
            let z = 1.0 + step * i as f64;
            if z > max_zoom + 1e-9 {
                break;
            }
            factors.push(z);
            i += 1;
        }
        BlurParams::Zoom { factors }
    }
}

/// Shrinks a kernel so it fits strictly inside the image.
pub(crate) fn fit(k: Kernel2D, img: &ImageBuffer) -> Result<Kernel2D> {
    let side = img.width().min(img.height());
    k.truncated(side.saturating_sub(1).max(1))
}

pub fn corrupt_blur(img: &ImageBuffer, params: &BlurParams, stream: &RandomStream) -> Result<ImageBuffer> {
    match params {
        BlurParams::Defocus { radius } => {
            let k = fit(Kernel2D::disk(*radius)?, img)?;
            convolve2d(img, &k, Boundary::Reflect)
        }
        BlurParams::Gaussian { sigma } => gaussian_blur(img, *sigma),
        BlurParams::Motion { length, angle } => {
            let angle = match angle {
                Some(a) => *a,
                None => {
                    let mut rng = stream.tag("motion-angle").rng();
                    rng.random_range(-std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_4)
                }
            };
            let k = fit(Kernel2D::line(*length, angle)?, img)?;
            convolve2d(img, &k, Boundary::Reflect)
        }
        BlurParams::Zoom { factors } => zoom_blur(img, factors),
        BlurParams::Glass { sigma, max_delta, iterations } => glass_blur(img, *sigma, *max_delta, *iterations, stream),
    }
}

pub(crate) fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    let k = fit(Kernel2D::gaussian(sigma)?, img)?;
    convolve2d(img, &k, Boundary::Reflect)
}

pub(crate) fn zoom_blur(img: &ImageBuffer, factors: &[f64]) -> Result<ImageBuffer> {
    if factors.is_empty() {
        return param("zoom blur needs at least one zoom factor");
    }
    if factors.iter().any(|&z| !(z >= 1.0) || !z.is_finite()) {
        return param(format!("zoom factors must be finite and ≥ 1, got {factors:?}"));
    }
    let (w, h) = img.dimensions();
    let data = img.data();
    let mut acc = vec![0.0f64; w * h * 3];
    for &z in factors {
        // A centre zoom is axis-aligned, so bilinear taps factor per axis.
        let xs = zoom_taps(w, z);
        let ys = zoom_taps(h, z);
        for (y, &(y0, y1, ty)) in ys.iter().enumerate() {
            for (x, &(x0, x1, tx)) in xs.iter().enumerate() {
                let i = (y * w + x) * 3;
                for c in 0..3 {
                    let at = |xi: usize, yi: usize| f64::from(data[(yi * w + xi) * 3 + c]);
                    let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * tx;
                    let bot = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * tx;
                    acc[i + c] += top + (bot - top) * ty;
                }
            }
        }
    }
    let n = factors.len() as f64;
    Ok(ImageBuffer::from_raw_clamped(w, h, acc.into_iter().map(|v| (v / n) as f32).collect()))
}

/// Clamped source indices and weight for each output index of a centre zoom.
fn zoom_taps(n: usize, z: f64) -> Vec<(usize, usize, f64)> {
    let c = n as f64 / 2.0;
    (0..n)
        .map(|i| {
            let f = c + (i as f64 + 0.5 - c) / z - 0.5;
            let i0 = f.floor();
            let t = f - i0;
            let clamp = |v: f64| (v.max(0.0) as usize).min(n - 1);
            (clamp(i0), clamp(i0 + 1.0), t)
        })
        .collect()
}

fn glass_blur(
    img: &ImageBuffer,
    sigma: f64,
    max_delta: usize,
    iterations: usize,
    stream: &RandomStream,
) -> Result<ImageBuffer> {
    let blurred = gaussian_blur(img, sigma)?;
    let (w, h) = blurred.dimensions();
    let mut data = blurred.into_raw();
    if max_delta > 0 {
        let mut rng = stream.tag("glass-swaps").rng();
        let d = max_delta as i64;
        for _ in 0..iterations {
            for y in 0..h {
                for x in 0..w {
                    let dx = rng.random_range(-d..=d) as isize;
                    let dy = rng.random_range(-d..=d) as isize;
                    let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    let (a, b) = ((y * w + x) * 3, (ny * w + nx) * 3);
                    for c in 0..3 {
                        data.swap(a + c, b + c);
                    }
                }
            }
        }
    }
    gaussian_blur(&ImageBuffer::from_raw_clamped(w, h, data), sigma)
}
