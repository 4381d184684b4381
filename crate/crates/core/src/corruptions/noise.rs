//! Additive, photon and impulse noise.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{param, Result};
use crate::imaging::{ImageBuffer, RandomStream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseParams {
    /// `x + N(0, σ)`.
    Gaussian { sigma: f64 },
    /// `Poisson(x·λ) / λ`.
    Shot { photons: f64 },
    /// Each sample independently becomes 0 or 1 with probability `p/2` each.
    Impulse { proportion: f64 },
    /// `x + x·N(0, σ)`.
    Speckle { sigma: f64 },
}

impl NoiseParams {
    fn validate(&self) -> Result<()> {
        match *self {
            NoiseParams::Gaussian { sigma } | NoiseParams::Speckle { sigma } if !(sigma >= 0.0) => {
                param(format!("noise sigma must be non-negative, got {sigma}"))
            }
            NoiseParams::Shot { photons } if !(photons > 0.0) => {
                param(format!("shot noise photon scale must be positive, got {photons}"))
            }
            NoiseParams::Impulse { proportion } if !(0.0..=1.0).contains(&proportion) => {
                param(format!("impulse proportion must lie in [0, 1], got {proportion}"))
            }
            _ => Ok(()),
        }
    }
}

pub fn corrupt_noise(img: &ImageBuffer, params: &NoiseParams, stream: &RandomStream) -> Result<ImageBuffer> {
    params.validate()?;
    let mut rng = stream.tag("noise").rng();
    let out = match *params {
        NoiseParams::Gaussian { sigma } => {
            if sigma == 0.0 {
                return Ok(img.clone());
            }
            img.map(|x| (f64::from(x) + sigma * normal(&mut rng)) as f32)
        }
        NoiseParams::Speckle { sigma } => {
            if sigma == 0.0 {
                return Ok(img.clone());
            }
            img.map(|x| {
                let x = f64::from(x);
                (x + x * sigma * normal(&mut rng)) as f32
            })
        }
        NoiseParams::Shot { photons } => img.map(|x| (poisson(&mut rng, f64::from(x) * photons) / photons) as f32),
        NoiseParams::Impulse { proportion } => {
            let half = proportion / 2.0;
            img.map(|x| {
                let u: f64 = rng.random();
                if u < half {
                    0.0
                } else if u < proportion {
                    1.0
                } else {
                    x
                }
            })
        }
    };
    Ok(out)
}

#[inline]
pub(crate) fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

const INVERSION_LIMIT: f64 = 12.0;
const NORMAL_LIMIT: f64 = 1000.0;

/// Poisson variate: sequential-search inversion for small means, the exact
/// rejection sampler from `rand_distr` in the middle range, and a rounded
/// normal approximation above 1000.
pub(crate) fn poisson(rng: &mut ChaCha20Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean < INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0.0;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1.0;
            p *= mean / k;
            cdf += p;
            if p < 1e-300 {
                break;
            }
        }
        k
    } else if mean <= NORMAL_LIMIT {
        Poisson::new(mean).expect("finite positive mean").sample(rng)
    } else {
        (mean + mean.sqrt() * normal(rng)).round().max(0.0)
    }
}
