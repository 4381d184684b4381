//! Single-channel scalar fields: masks, flake layers, displacement maps.

use super::buffer::ImageBuffer;
use super::kernel::{convolve_planar, Boundary, Kernel2D};

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Field {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Gaussian blur (reflect boundary), kernel truncated to fit.
    pub fn blurred(&self, sigma: f64) -> Field {
        self.convolved(Kernel2D::gaussian(sigma).expect("valid sigma"))
    }

    /// Convolution with reflect boundary; the kernel is cropped to fit.
    pub fn convolved(&self, k: Kernel2D) -> Field {
        let side = self.width.min(self.height);
        let k = k.truncated(side.saturating_sub(1).max(1)).expect("kernel crop");
        let data = convolve_planar(&self.data, self.width, self.height, 1, &k, Boundary::Reflect)
            .expect("kernel fits");
        Field { width: self.width, height: self.height, data }
    }

    /// Bilinear resize with pixel-centre alignment and edge clamping.
    pub fn resized(&self, width: usize, height: usize) -> Field {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        Field::from_fn(width, height, |x, y| {
            self.sample((x as f64 + 0.5) * sx, (y as f64 + 0.5) * sy)
        })
    }

    /// Bilinear sample at continuous coordinates (pixel centres at `i + 0.5`).
    pub fn sample(&self, x: f64, y: f64) -> f32 {
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let g = |x: usize, y: usize| f64::from(self.get(x, y));
        let top = g(x0, y0) + (g(x1, y0) - g(x0, y0)) * tx;
        let bot = g(x0, y1) + (g(x1, y1) - g(x0, y1)) * tx;
        (top + (bot - top) * ty) as f32
    }

    /// Rotation by 180°.
    pub fn rotated_half_turn(&self) -> Field {
        let mut data = self.data.clone();
        data.reverse();
        Field { width: self.width, height: self.height, data }
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Field {
        Field::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn mean_std(&self) -> (f64, f64) {
        let n = self.data.len() as f64;
        let mean = self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = self.data.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Grey RGB rendering, clamped.
    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::from_fn(self.width, self.height, |x, y| [self.get(x, y); 3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_same_size_is_identity() {
        let f = Field::from_fn(7, 5, |x, y| (x * 3 + y) as f32);
        assert_eq!(f.resized(7, 5), f);
    }

    #[test]
    fn half_turn_twice_is_identity() {
        let f = Field::from_fn(6, 4, |x, y| (x * 10 + y) as f32);
        assert_eq!(f.rotated_half_turn().get(0, 0), f.get(5, 3));
        assert_eq!(f.rotated_half_turn().rotated_half_turn(), f);
    }

    #[test]
    fn blur_preserves_mean_of_constant() {
        let f = Field::from_fn(20, 20, |_, _| 0.25);
        let b = f.blurred(3.0);
        assert!(b.data.iter().all(|v| (v - 0.25).abs() < 1e-6));
    }
}
