//! Procedural calibration corpus.
//!
//! Fifty deterministic 224×224 scenes: a smooth background (plasma cloud or
//! colour gradient), a mid-frequency texture and a handful of flat-shaded
//! shapes with hard edges. They stand in for a natural-image corpus when
//! calibrating severities and in tests; nothing here is meant to look real.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::corruptions::plasma::{diamond_square, plasma_side_for};
use crate::imaging::{ImageBuffer, RandomStream};

pub const CORPUS_SIZE: usize = 50;
pub const CORPUS_SIDE: usize = 224;

const CORPUS_SEED: u64 = 0x5eed_c0de;

/// The `index`-th scene of the corpus at the default side length.
pub fn synthetic_image(index: usize) -> ImageBuffer {
    synthetic_image_sized(index, CORPUS_SIDE, CORPUS_SIDE)
}

pub fn synthetic_image_sized(index: usize, width: usize, height: usize) -> ImageBuffer {
    let stream = RandomStream::new(CORPUS_SEED).tag("corpus").tag(index as u64);
    let mut rng = stream.tag("layout").rng();

    let c0 = colour(&mut rng);
    let c1 = colour(&mut rng);
    let background: Vec<f32> = if index % 2 == 0 {
        let side = plasma_side_for(width.max(height));
        let map = diamond_square(side, rng.random_range(0.45..0.75), &stream.tag("background"))
            .expect("valid plasma side");
        (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| map.get(x, y) as f32).collect()
    } else {
        let angle: f32 = rng.random_range(0.0..std::f32::consts::TAU);
        let (s, c) = angle.sin_cos();
        (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| {
                let u = (x as f32 / width as f32 - 0.5) * c + (y as f32 / height as f32 - 0.5) * s;
                (u + 0.5).clamp(0.0, 1.0)
            })
            .collect()
    };

    let freq: f32 = rng.random_range(0.08..0.35);
    let tex_angle: f32 = rng.random_range(0.0..std::f32::consts::PI);
    let tex_amp: f32 = rng.random_range(0.03..0.15);
    let (ts, tc) = tex_angle.sin_cos();

    let shapes: Vec<Shape> = (0..rng.random_range(3..8)).map(|_| Shape::random(&mut rng, width, height)).collect();

    ImageBuffer::from_fn(width, height, |x, y| {
        let t = background[y * width + x];
        let mut p = [0, 1, 2].map(|c| c0[c] * (1.0 - t) + c1[c] * t);
        let wave = tex_amp * ((x as f32 * tc + y as f32 * ts) * freq).sin();
        for v in &mut p {
            *v += wave;
        }
        for shape in &shapes {
            if shape.contains(x as f32 + 0.5, y as f32 + 0.5) {
                p = shape.colour;
            }
        }
        p
    })
}

/// All fifty scenes in index order.
pub fn synthetic_corpus() -> Vec<ImageBuffer> {
    (0..CORPUS_SIZE).map(synthetic_image).collect()
}

fn colour(rng: &mut ChaCha20Rng) -> [f32; 3] {
    [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)]
}

struct Shape {
    circle: bool,
    cx: f32,
    cy: f32,
    rx: f32,
    ry: f32,
    colour: [f32; 3],
}

impl Shape {
    fn random(rng: &mut ChaCha20Rng, width: usize, height: usize) -> Shape {
        let (w, h) = (width as f32, height as f32);
        Shape {
            circle: rng.random(),
            cx: rng.random_range(0.1 * w..0.9 * w),
            cy: rng.random_range(0.1 * h..0.9 * h),
            rx: rng.random_range(0.04 * w..0.2 * w),
            ry: rng.random_range(0.04 * h..0.2 * h),
            colour: colour(rng),
        }
    }

    fn contains(&self, x: f32, y: f32) -> bool {
        let (dx, dy) = ((x - self.cx) / self.rx, (y - self.cy) / self.ry);
        if self.circle {
            dx * dx + dy * dy <= 1.0
        } else {
            dx.abs() <= 1.0 && dy.abs() <= 1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_distinct() {
        let a = synthetic_image_sized(3, 64, 48);
        assert_eq!(a, synthetic_image_sized(3, 64, 48));
        assert_ne!(a, synthetic_image_sized(4, 64, 48));
        assert_eq!(a.dimensions(), (64, 48));
    }
}
