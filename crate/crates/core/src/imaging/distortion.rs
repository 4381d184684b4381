//! Full-reference distortion measures used for severity calibration.

use super::buffer::ImageBuffer;
use super::kernel::{gaussian_profile, Boundary};
use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// Root-mean-square sample difference (a scaled Euclidean metric).
    MeanL2,
    /// `1 − SSIM`, channel-averaged, 11×11 Gaussian window (σ = 1.5).
    OneMinusSsim,
}

pub fn distortion(a: &ImageBuffer, b: &ImageBuffer, measure: Measure) -> Result<f64> {
    match measure {
        Measure::MeanL2 => mean_l2(a, b),
        Measure::OneMinusSsim => ssim(a, b).map(|s| (1.0 - s).max(0.0)),
    }
}

fn check_shapes(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return param(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ));
    }
    Ok(())
}

/// `sqrt(mean((a − b)²))` over every sample. Black vs white is 1.
pub fn mean_l2(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_shapes(a, b)?;
    let ss: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    Ok((ss / a.data().len() as f64).sqrt())
}

const K1: f64 = 0.01;
const K2: f64 = 0.03;
const WINDOW_SIGMA: f64 = 1.5;
const WINDOW_RADIUS: usize = 5;

/// Mean structural similarity, averaged over the three channels.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_shapes(a, b)?;
    let (w, h) = a.dimensions();
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let profile = gaussian_profile(WINDOW_SIGMA, WINDOW_RADIUS);
    let n = w * h;
    let mut total = 0.0;
    for c in 0..3 {
        let x: Vec<f64> = (0..n).map(|i| f64::from(a.data()[i * 3 + c])).collect();
        let y: Vec<f64> = (0..n).map(|i| f64::from(b.data()[i * 3 + c])).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mx = smooth(&x, w, h, &profile);
        let my = smooth(&y, w, h, &profile);
        let sxx = smooth(&xx, w, h, &profile);
        let syy = smooth(&yy, w, h, &profile);
        let sxy = smooth(&xy, w, h, &profile);
        let mut acc = 0.0;
        for i in 0..n {
            let mxy = mx[i] * my[i];
            let vx = sxx[i] - mx[i] * mx[i];
            let vy = syy[i] - my[i] * my[i];
            let cov = sxy[i] - mxy;
            let num = (2.0 * mxy + c1) * (2.0 * cov + c2);
            let den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
            acc += num / den;
        }
        total += acc / n as f64;
    }
    Ok(total / 3.0)
}

fn smooth(field: &[f64], w: usize, h: usize, profile: &[f64]) -> Vec<f64> {
    let r = (profile.len() / 2) as isize;
    let b = Boundary::Reflect;
    let mut tmp = vec![0.0; field.len()];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = profile
                .iter()
                .enumerate()
                .map(|(t, k)| k * field[y * w + b.index(x as isize + t as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; field.len()];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = profile
                .iter()
                .enumerate()
                .map(|(t, k)| k * tmp[b.index(y as isize + t as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn noise_img(seed: u32, w: usize, h: usize) -> ImageBuffer {
        let mut s = seed.wrapping_mul(2654435761).wrapping_add(1);
        ImageBuffer::from_fn(w, h, |_, _| {
            let mut px = [0.0; 3];
            for v in &mut px {
                s ^= s << 13;
                s ^= s >> 17;
                s ^= s << 5;
                *v = (s % 1000) as f32 / 999.0;
            }
            px
        })
    }

    #[test]
    fn identical_images_have_zero_distance() {
        let x = noise_img(3, 20, 17);
        assert_eq!(mean_l2(&x, &x).unwrap(), 0.0);
        assert_eq!(ssim(&x, &x).unwrap(), 1.0);
        assert_eq!(distortion(&x, &x, Measure::OneMinusSsim).unwrap(), 0.0);
    }

    #[test]
    fn black_vs_white_is_one() {
        let b = ImageBuffer::new(16, 16);
        let w = ImageBuffer::filled(16, 16, [1.0; 3]);
        assert_eq!(mean_l2(&b, &w).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_is_parameter_error() {
        let a = ImageBuffer::new(16, 16);
        let b = ImageBuffer::new(16, 17);
        assert!(matches!(mean_l2(&a, &b), Err(crate::Error::Parameter(_))));
        assert!(ssim(&a, &b).is_err());
    }

    #[test]
    fn ssim_drops_with_noise_and_is_symmetric() {
        let x = ImageBuffer::from_fn(32, 32, |i, j| [(i as f32 / 31.0), (j as f32 / 31.0), 0.5]);
        let y = noise_img(9, 32, 32);
        let s1 = ssim(&x, &y).unwrap();
        let s2 = ssim(&y, &x).unwrap();
        assert!(s1 < 0.5);
        assert!((s1 - s2).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mean_l2_triangle_inequality(a in 0u32..10_000, b in 0u32..10_000, c in 0u32..10_000) {
            let (x, y, z) = (noise_img(a, 16, 16), noise_img(b, 16, 16), noise_img(c, 16, 16));
            let xy = mean_l2(&x, &y).unwrap();
            let yz = mean_l2(&y, &z).unwrap();
            let xz = mean_l2(&x, &z).unwrap();
            prop_assert!(xz <= xy + yz + 1e-9);
            prop_assert!((xy - mean_l2(&y, &x).unwrap()).abs() < 1e-15);
        }
    }
}
