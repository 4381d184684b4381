//! 2-D kernels and per-channel convolution.

use super::buffer::ImageBuffer;
use crate::error::{param, Result};

/// Edge handling for sampling outside the raster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Half-sample symmetric mirroring: `... c b a | a b c ...`.
    #[default]
    Reflect,
    /// Repeat the edge sample.
    Clamp,
}

impl Boundary {
    /// Maps a possibly out-of-range coordinate into `0..n`.
    #[inline]
    pub fn index(self, i: isize, n: usize) -> usize {
        let n = n as isize;
        match self {
            Boundary::Clamp => i.clamp(0, n - 1) as usize,
            Boundary::Reflect => {
                let period = 2 * n;
                let mut m = i.rem_euclid(period);
                if m >= n {
                    m = period - 1 - m;
                }
                m as usize
            }
        }
    }
}

/// A square kernel of odd side.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
    /// Set when `weights` is the outer product of this 1-D profile with itself.
    separable: Option<Vec<f64>>,
}

impl Kernel2D {
    /// Wraps row-major weights. Fails on an even or zero side.
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return param(format!("kernel size must be odd, got {size}"));
        }
        if weights.len() != size * size {
            return param(format!("kernel of size {size} needs {} weights", size * size));
        }
        Ok(Self { size, weights, separable: None })
    }

    /// Outer product of a 1-D profile with itself.
    pub fn from_separable(profile: Vec<f64>) -> Result<Self> {
        let size = profile.len();
        let weights = profile.iter().flat_map(|a| profile.iter().map(move |b| a * b)).collect();
        let mut k = Self::new(size, weights)?;
        k.separable = Some(profile);
        Ok(k)
    }

    pub fn identity() -> Self {
        Self { size: 1, weights: vec![1.0], separable: Some(vec![1.0]) }
    }

    pub fn box_filter(size: usize) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return param(format!("kernel size must be odd, got {size}"));
        }
        Self::from_separable(vec![1.0 / size as f64; size])
    }

    /// Normalized Gaussian truncated at 4σ. σ = 0 gives the identity.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return param(format!("gaussian sigma must be finite and non-negative, got {sigma}"));
        }
        if sigma == 0.0 {
            return Ok(Self::identity());
        }
        let radius = (4.0 * sigma).ceil() as usize;
        Self::from_separable(gaussian_profile(sigma, radius))
    }

    /// Normalized flat disk of the given radius. Radii below 1 give the identity.
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return param(format!("disk radius must be finite and non-negative, got {radius}"));
        }
        if radius < 1.0 {
            return Ok(Self::identity());
        }
        let r = radius.ceil() as isize;
        let size = (2 * r + 1) as usize;
        let r2 = radius * radius;
        let mut weights = Vec::with_capacity(size * size);
        for y in -r..=r {
            for x in -r..=r {
                let d2 = (x * x + y * y) as f64;
                weights.push(if d2 <= r2 { 1.0 } else { 0.0 });
            }
        }
        Self::new(size, weights)?.normalized()
    }

    /// Normalized anti-aliased line segment of `length` pixels through the
    /// centre at `angle` radians (0 = horizontal). Lengths ≤ 1 give the identity.
    pub fn line(length: f64, angle: f64) -> Result<Self> {
        if !(length >= 0.0) || !length.is_finite() {
            return param(format!("line length must be finite and non-negative, got {length}"));
        }
        if length <= 1.0 {
            return Ok(Self::identity());
        }
        let half = length / 2.0;
        let r = half.ceil() as usize + 1;
        let size = 2 * r + 1;
        let mut weights = vec![0.0; size * size];
        let (dy, dx) = angle.sin_cos();
        let samples = (length * 4.0).ceil() as usize;
        for s in 0..=samples {
            let t = -half + length * s as f64 / samples as f64;
            let (px, py) = (r as f64 + t * dx, r as f64 + t * dy);
            let (x0, y0) = (px.floor(), py.floor());
            let (fx, fy) = (px - x0, py - y0);
            let (x0, y0) = (x0 as usize, y0 as usize);
            for (xi, wx) in [(x0, 1.0 - fx), (x0 + 1, fx)] {
                for (yi, wy) in [(y0, 1.0 - fy), (y0 + 1, fy)] {
                    if xi < size && yi < size {
                        weights[yi * size + xi] += wx * wy;
                    }
                }
            }
        }
        Self::new(size, weights)?.normalized()
    }

    /// Scales the weights to sum to one.
    pub fn normalized(mut self) -> Result<Self> {
        let sum: f64 = self.weights.iter().sum();
        if sum.abs() < 1e-12 {
            return param("cannot normalize a kernel whose weights sum to zero");
        }
        for w in &mut self.weights {
            *w /= sum;
        }
        if let Some(p) = &mut self.separable {
            let s: f64 = p.iter().sum();
            for w in p.iter_mut() {
                *w /= s;
            }
        }
        Ok(self)
    }

    /// Centre crop to at most `max_size` (rounded down to odd), renormalized.
    pub fn truncated(self, max_size: usize) -> Result<Self> {
        let max_size = if max_size % 2 == 0 { max_size.saturating_sub(1) } else { max_size };
        if max_size == 0 {
            return param("kernel cannot be truncated below size 1");
        }
        if self.size <= max_size {
            return Ok(self);
        }
        let off = (self.size - max_size) / 2;
        if let Some(p) = &self.separable {
            return Self::from_separable(p[off..off + max_size].to_vec())?.normalized();
        }
        let mut weights = Vec::with_capacity(max_size * max_size);
        for y in 0..max_size {
            let row = (y + off) * self.size + off;
            weights.extend_from_slice(&self.weights[row..row + max_size]);
        }
        Self::new(max_size, weights)?.normalized()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }
}

pub(crate) fn gaussian_profile(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let p: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = p.iter().sum();
    p.into_iter().map(|v| v / s).collect()
}

/// Per-channel discrete convolution, output clamped to `[0, 1]`.
pub fn convolve2d(img: &ImageBuffer, k: &Kernel2D, boundary: Boundary) -> Result<ImageBuffer> {
    let out = convolve_planar(img.data(), img.width(), img.height(), 3, k, boundary)?;
    Ok(ImageBuffer::from_raw_clamped(img.width(), img.height(), out))
}

/// Convolution over raw interleaved samples with `channels` channels. No clamping,
/// so the result is exactly linear in the input (up to rounding).
pub fn convolve_planar(
    data: &[f32],
    width: usize,
    height: usize,
    channels: usize,
    k: &Kernel2D,
    boundary: Boundary,
) -> Result<Vec<f32>> {
    assert_eq!(data.len(), width * height * channels, "sample count mismatch");
    if k.size >= width.min(height) && k.size > 1 {
        return param(format!(
            "kernel size {} must be smaller than the image side {}",
            k.size,
            width.min(height)
        ));
    }
    if k.size == 1 {
        let w = k.weights[0] as f32;
        return Ok(data.iter().map(|&v| v * w).collect());
    }
    Ok(match &k.separable {
        Some(profile) => separable_pass(data, width, height, channels, profile, boundary),
        None => dense_pass(data, width, height, channels, k, boundary),
    })
}

/// Copies `data` into a buffer with `r` samples of boundary padding on every side.
fn pad(data: &[f32], w: usize, h: usize, ch: usize, r: usize, boundary: Boundary) -> Vec<f32> {
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut out = vec![0.0f32; pw * ph * ch];
    for py in 0..ph {
        let sy = boundary.index(py as isize - r as isize, h);
        let row = &data[sy * w * ch..(sy + 1) * w * ch];
        let dst = &mut out[py * pw * ch..(py + 1) * pw * ch];
        dst[r * ch..(r + w) * ch].copy_from_slice(row);
        for px in (0..r).chain(r + w..pw) {
            let sx = boundary.index(px as isize - r as isize, w);
            dst[px * ch..(px + 1) * ch].copy_from_slice(&row[sx * ch..(sx + 1) * ch]);
        }
    }
    out
}

fn dense_pass(data: &[f32], w: usize, h: usize, ch: usize, k: &Kernel2D, boundary: Boundary) -> Vec<f32> {
    let r = k.radius();
    let padded = pad(data, w, h, ch, r, boundary);
    let pw = w + 2 * r;
    // Flip for true convolution and skip zero taps; offsets index the padded buffer.
    let taps: Vec<(usize, usize, f64)> = (0..k.size)
        .flat_map(|j| (0..k.size).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let wgt = k.weights[j * k.size + i];
            (wgt != 0.0).then_some((2 * r - i, 2 * r - j, wgt))
        })
        .collect();
    let row_len = w * ch;
    let mut out = vec![0.0f32; data.len()];
    let mut acc = vec![0.0f64; row_len];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for &(ox, oy, wgt) in &taps {
            let start = ((y + oy) * pw + ox) * ch;
            for (a, &v) in acc.iter_mut().zip(&padded[start..start + row_len]) {
                *a += wgt * f64::from(v);
            }
        }
        for (o, a) in out[y * row_len..(y + 1) * row_len].iter_mut().zip(&acc) {
            *o = *a as f32;
        }
    }
    out
}

fn separable_pass(data: &[f32], w: usize, h: usize, ch: usize, profile: &[f64], boundary: Boundary) -> Vec<f32> {
    let r = profile.len() / 2;
    let row_len = w * ch;
    // Horizontal pass over boundary-extended rows; f64 intermediates so the
    // two passes round once.
    let mut tmp = vec![0.0f64; data.len()];
    let mut ext = vec![0.0f32; (w + 2 * r) * ch];
    for y in 0..h {
        let row = &data[y * row_len..(y + 1) * row_len];
        for px in 0..w + 2 * r {
            let sx = boundary.index(px as isize - r as isize, w);
            ext[px * ch..(px + 1) * ch].copy_from_slice(&row[sx * ch..(sx + 1) * ch]);
        }
        let dst = &mut tmp[y * row_len..(y + 1) * row_len];
        for (t, &wgt) in profile.iter().enumerate() {
            let start = (2 * r - t) * ch;
            for (a, &v) in dst.iter_mut().zip(&ext[start..start + row_len]) {
                *a += wgt * f64::from(v);
            }
        }
    }
    let mut out = vec![0.0f32; data.len()];
    let mut acc = vec![0.0f64; row_len];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (t, &wgt) in profile.iter().enumerate() {
            let sy = boundary.index(y as isize + r as isize - t as isize, h);
            for (a, &v) in acc.iter_mut().zip(&tmp[sy * row_len..(sy + 1) * row_len]) {
                *a += wgt * v;
            }
        }
        for (o, a) in out[y * row_len..(y + 1) * row_len].iter_mut().zip(&acc) {
            *o = *a as f32;
        }
    }
    out
}
