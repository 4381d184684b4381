use sha2::{Digest, Sha256};

use crate::error::{param, Error, Result};

/// Smallest side accepted by the corruption and perturbation generators.
pub const MIN_BENCHMARK_SIDE: usize = 16;

/// An RGB raster of `f32` intensities in `[0, 1]`, row-major, channels interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub const CHANNELS: usize = 3;

    /// A black image.
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let rgb = rgb.map(|v| v.clamp(0.0, 1.0));
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    /// Builds an image from interleaved samples, rejecting values outside `[0, 1]`.
    pub fn from_raw(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return param(format!("degenerate image {width}x{height}"));
        }
        if data.len() != width * height * 3 {
            return param(format!(
                "expected {} samples for {width}x{height}x3, got {}",
                width * height * 3,
                data.len()
            ));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!("sample {v} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    /// Builds an image from interleaved samples, clamping each into `[0, 1]`.
    /// NaN samples become 0.
    pub fn from_raw_clamped(width: usize, height: usize, mut data: Vec<f32>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert_eq!(data.len(), width * height * 3, "sample count mismatch");
        for v in &mut data {
            *v = clamp01(*v);
        }
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).map(clamp01));
            }
        }
        Self::from_raw_clamped(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            self.data[i + c] = clamp01(rgb[c]);
        }
    }

    /// Applies `f` to every sample, clamping the result.
    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Self {
        let data = self.data.iter().map(|&v| clamp01(f(v))).collect();
        Self { width: self.width, height: self.height, data }
    }

    /// Applies `f` to every pixel, clamping the result.
    pub fn map_pixels(&self, mut f: impl FnMut(usize, usize, [f32; 3]) -> [f32; 3]) -> Self {
        Self::from_fn(self.width, self.height, |x, y| f(x, y, self.pixel(x, y)))
    }

    /// Per-channel means over all pixels.
    pub fn channel_means(&self) -> [f64; 3] {
        let mut sums = [0.0f64; 3];
        for px in self.data.chunks_exact(3) {
            for c in 0..3 {
                sums[c] += f64::from(px[c]);
            }
        }
        let n = (self.width * self.height) as f64;
        sums.map(|s| s / n)
    }

    /// Rec. 601 luma of each pixel.
    pub fn luma(&self) -> Vec<f32> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    pub fn mean_luma(&self) -> f64 {
        self.luma().iter().map(|&v| f64::from(v)).sum::<f64>() / (self.width * self.height) as f64
    }

    /// Horizontal and vertical mirror flips.
    pub fn flipped(&self, horizontal: bool, vertical: bool) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(w, h, |x, y| {
            let sx = if horizontal { w - 1 - x } else { x };
            let sy = if vertical { h - 1 - y } else { y };
            self.pixel(sx, sy)
        })
    }

    /// Copies the `width`×`height` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return param(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            ));
        }
        Ok(Self::from_fn(width, height, |x, y| self.pixel(x0 + x, y0 + y)))
    }

    /// Rejects images too small for the benchmark generators.
    pub fn ensure_benchmark_size(&self) -> Result<()> {
        if self.width < MIN_BENCHMARK_SIDE || self.height < MIN_BENCHMARK_SIDE {
            return param(format!(
                "image {}x{} is smaller than the {MIN_BENCHMARK_SIDE}x{MIN_BENCHMARK_SIDE} minimum",
                self.width, self.height
            ));
        }
        Ok(())
    }

    /// SHA-256 over the dimensions and the little-endian sample bits.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.width as u64).to_le_bytes());
        hasher.update((self.height as u64).to_le_bytes());
        for v in &self.data {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

}

#[inline]
pub(crate) fn clamp01(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(ImageBuffer::from_raw(1, 1, vec![0.0, 1.5, 0.2]).is_err());
        assert!(ImageBuffer::from_raw(1, 1, vec![0.0, 0.5]).is_err());
        assert!(ImageBuffer::from_raw(1, 1, vec![0.0, 1.0, 0.2]).is_ok());
    }

    #[test]
    fn clamped_constructor_sanitizes() {
        let img = ImageBuffer::from_raw_clamped(1, 1, vec![-1.0, f32::NAN, 2.0]);
        assert_eq!(img.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn benchmark_size_gate() {
        assert!(ImageBuffer::new(15, 64).ensure_benchmark_size().is_err());
        assert!(ImageBuffer::new(16, 16).ensure_benchmark_size().is_ok());
    }

    #[test]
    fn hash_depends_on_shape_and_content() {
        let a = ImageBuffer::new(4, 2);
        let b = ImageBuffer::new(2, 4);
        let c = ImageBuffer::filled(4, 2, [0.0, 0.0, 1.0 / 255.0]);
        assert_ne!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!(a.content_hash(), a.clone().content_hash());
    }
}
