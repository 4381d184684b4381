//! Diamond-square plasma fractal.

use rand::Rng;

use crate::error::{param, Result};
use crate::imaging::RandomStream;

/// Initial displacement amplitude at the coarsest level (corners are drawn
/// from `[0, 1)`).
pub const INITIAL_AMPLITUDE: f64 = 0.5;

/// A square heightmap, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Heightmap {
    pub size: usize,
    pub data: Vec<f64>,
}

impl Heightmap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.size + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.size as u64).to_le_bytes());
        for v in &self.data {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Smallest `2^k + 1` (k ≥ 1) not below `n`.
pub fn plasma_side_for(n: usize) -> usize {
    let mut side = 3;
    while side < n {
        side = (side - 1) * 2 + 1;
    }
    side
}

/// Plasma fractal of side `n = 2^k + 1`, min-max normalized to `[0, 1]`.
///
/// `roughness` in `(0, 1]` multiplies the displacement amplitude after
/// every level; larger values give rougher maps.
pub fn diamond_square(n: usize, roughness: f64, stream: &RandomStream) -> Result<Heightmap> {
    let raw = diamond_square_raw(n, roughness, INITIAL_AMPLITUDE, stream)?;
    Ok(normalize(raw))
}

/// Unnormalized diamond-square with an explicit starting amplitude.
///
/// Corners are drawn uniformly from `[0, 1)`. Each level runs a square step
/// (centre = mean of the four corners) and a diamond step (edge midpoint =
/// mean of its four neighbours, or of its two collinear neighbours on the
/// border), each adding uniform noise in `[−a, a)`; `a` is then multiplied by
/// `roughness`. With `amplitude = 0` the result is the bilinear surface of the
/// corners.
pub fn diamond_square_raw(n: usize, roughness: f64, amplitude: f64, stream: &RandomStream) -> Result<Heightmap> {
    if n < 3 || !(n - 1).is_power_of_two() {
        return param(format!("diamond-square side must be 2^k + 1 with k ≥ 1, got {n}"));
    }
    if !(roughness > 0.0 && roughness <= 1.0) {
        return param(format!("roughness must lie in (0, 1], got {roughness}"));
    }
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return param(format!("amplitude must be finite and non-negative, got {amplitude}"));
    }
    let mut rng = stream.tag("diamond-square").rng();
    let mut h = vec![0.0f64; n * n];
    let last = n - 1;
    for (x, y) in [(0, 0), (last, 0), (0, last), (last, last)] {
        h[y * n + x] = rng.random::<f64>();
    }
    let jitter = |rng: &mut rand_chacha::ChaCha20Rng, a: f64| -> f64 {
        // Always draw, so the stream position does not depend on the amplitude.
        let u: f64 = rng.random();
        a * (2.0 * u - 1.0)
    };

    let mut amp = amplitude;
    let mut step = last;
    while step > 1 {
        let half = step / 2;
        // Square step.
        for y in (half..n).step_by(step) {
            for x in (half..n).step_by(step) {
                let avg = (h[(y - half) * n + x - half]
                    + h[(y - half) * n + x + half]
                    + h[(y + half) * n + x - half]
                    + h[(y + half) * n + x + half])
                    / 4.0;
                h[y * n + x] = avg + jitter(&mut rng, amp);
            }
        }
        // Diamond step.
        for y in (0..n).step_by(half) {
            let x_start = if (y / half) % 2 == 0 { half } else { 0 };
            for x in (x_start..n).step_by(step) {
                let avg = if y == 0 || y == last {
                    (h[y * n + x - half] + h[y * n + x + half]) / 2.0
                } else if x == 0 || x == last {
                    (h[(y - half) * n + x] + h[(y + half) * n + x]) / 2.0
                } else {
                    (h[y * n + x - half] + h[y * n + x + half] + h[(y - half) * n + x] + h[(y + half) * n + x])
                        / 4.0
                };
                h[y * n + x] = avg + jitter(&mut rng, amp);
            }
        }
        amp *= roughness;
        step = half;
    }
    Ok(Heightmap { size: n, data: h })
}

/// Min-max normalization; a constant map becomes all zeros.
pub fn normalize(mut map: Heightmap) -> Heightmap {
    let (lo, hi) = map.min_max();
    let span = hi - lo;
    for v in &mut map.data {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
    map
}
