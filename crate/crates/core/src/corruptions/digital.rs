//! Contrast, elastic, pixelate, JPEG and saturate.

use rand::Rng;

use crate::error::{param, Result};
use crate::imaging::color::{hsv_to_rgb_pixel, rgb_to_hsv_pixel};
use crate::imaging::io::{decode_image, encode_image};
use crate::imaging::warp::{sample_bilinear, Fill};
use crate::imaging::{resample, Field, Filter, ImageBuffer, ImageFormat, RandomStream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DigitalParams {
    /// Pulls every channel towards its mean: `(x − m)·c + m`.
    Contrast { factor: f64 },
    /// Smooth random displacement with RMS `alpha` pixels.
    Elastic { alpha: f64, smoothing: f64 },
    /// Area-average down by `factor`, nearest-neighbour back up.
    Pixelate { factor: f64 },
    Jpeg { quality: u8 },
    /// HSV saturation `s·scale + shift`.
    Saturate { scale: f64, shift: f64 },
}

pub fn corrupt_digital(img: &ImageBuffer, params: &DigitalParams, stream: &RandomStream) -> Result<ImageBuffer> {
    match *params {
        DigitalParams::Contrast { factor } => {
            if !(factor >= 0.0) {
                return param(format!("contrast factor must be non-negative, got {factor}"));
            }
            let means = img.channel_means();
            Ok(img.map_pixels(|_, _, p| [0, 1, 2].map(|c| ((f64::from(p[c]) - means[c]) * factor + means[c]) as f32)))
        }
        DigitalParams::Elastic { alpha, smoothing } => elastic(img, alpha, smoothing, stream),
        DigitalParams::Pixelate { factor } => {
            if !(factor >= 1.0) {
                return param(format!("pixelate factor must be at least 1, got {factor}"));
            }
            let (w, h) = img.dimensions();
            let sw = ((w as f64 / factor).round() as usize).max(1);
            let sh = ((h as f64 / factor).round() as usize).max(1);
            let small = resample(img, sw, sh, Filter::Box)?;
            resample(&small, w, h, Filter::Nearest)
        }
        DigitalParams::Jpeg { quality } => {
            let bytes = encode_image(img, ImageFormat::Jpeg { quality })?;
            decode_image(&bytes)
        }
        DigitalParams::Saturate { scale, shift } => {
            if !(scale >= 0.0) {
                return param(format!("saturation scale must be non-negative, got {scale}"));
            }
            let (a, b) = (scale as f32, shift as f32);
            Ok(img.map_pixels(|_, _, p| {
                let [h, s, v] = rgb_to_hsv_pixel(p);
                hsv_to_rgb_pixel([h, (s * a + b).clamp(0.0, 1.0), v])
            }))
        }
    }
}

fn displacement(w: usize, h: usize, smoothing: f64, rng: &mut impl Rng) -> Field {
    let raw = Field::from_fn(w, h, |_, _| rng.random_range(-1.0f32..1.0));
    raw.blurred(smoothing)
}

pub(crate) fn elastic(img: &ImageBuffer, alpha: f64, smoothing: f64, stream: &RandomStream) -> Result<ImageBuffer> {
    if !(alpha >= 0.0) || !(smoothing >= 0.0) {
        return param(format!("elastic needs non-negative alpha and smoothing, got {alpha}, {smoothing}"));
    }
    if alpha == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dimensions();
    let mut rng = stream.tag("elastic").rng();
    let dx = displacement(w, h, smoothing, &mut rng);
    let dy = displacement(w, h, smoothing, &mut rng);
    let rms = {
        let ss: f64 = dx.data.iter().chain(&dy.data).map(|&v| f64::from(v) * f64::from(v)).sum();
        (ss / (w * h) as f64).sqrt()
    };
    if rms == 0.0 {
        return Ok(img.clone());
    }
    let s = alpha / rms;
    Ok(ImageBuffer::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let sx = x as f64 + 0.5 + s * f64::from(dx.data[i]);
        let sy = y as f64 + 0.5 + s * f64::from(dy.data[i]);
        sample_bilinear(img, sx, sy, Fill::Clamp)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::mean_l2;

    fn scene() -> ImageBuffer {
        ImageBuffer::from_fn(48, 48, |x, y| [((x * 7 + y * 3) % 17) as f32 / 16.0, x as f32 / 47.0, y as f32 / 47.0])
    }

    #[test]
    fn contrast_zero_gives_channel_means() {
        let img = scene();
        let out = corrupt_digital(&img, &DigitalParams::Contrast { factor: 0.0 }, &RandomStream::new(0)).unwrap();
        let m = img.channel_means();
        for p in out.data().chunks(3) {
            for c in 0..3 {
                assert!((f64::from(p[c]) - m[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn contrast_one_is_identity() {
        let img = scene();
        let out = corrupt_digital(&img, &DigitalParams::Contrast { factor: 1.0 }, &RandomStream::new(0)).unwrap();
        assert!(mean_l2(&img, &out).unwrap() < 1e-6);
    }

    #[test]
    fn pixelate_produces_blocks() {
        let img = scene();
        let out = corrupt_digital(&img, &DigitalParams::Pixelate { factor: 4.0 }, &RandomStream::new(0)).unwrap();
        assert_eq!(out.dimensions(), img.dimensions());
        assert_eq!(out.pixel(0, 0), out.pixel(3, 3));
        assert!(corrupt_digital(&img, &DigitalParams::Pixelate { factor: 0.5 }, &RandomStream::new(0)).is_err());
    }

    #[test]
    fn saturate_zero_scale_is_grey() {
        let img = scene();
        let out = corrupt_digital(&img, &DigitalParams::Saturate { scale: 0.0, shift: 0.0 }, &RandomStream::new(0)).unwrap();
        for p in out.data().chunks(3) {
            assert!((p[0] - p[1]).abs() < 1e-6 && (p[1] - p[2]).abs() < 1e-6);
        }
    }

    #[test]
    fn elastic_displacement_grows_with_alpha() {
        let img = scene();
        let s = RandomStream::new(9);
        let a = elastic(&img, 1.0, 4.0, &s).unwrap();
        let b = elastic(&img, 4.0, 4.0, &s).unwrap();
        assert!(mean_l2(&img, &a).unwrap() < mean_l2(&img, &b).unwrap());
        assert_eq!(elastic(&img, 0.0, 4.0, &s).unwrap(), img);
    }

    #[test]
    fn jpeg_lower_quality_is_worse() {
        let img = scene();
        let s = RandomStream::new(0);
        let hi = corrupt_digital(&img, &DigitalParams::Jpeg { quality: 90 }, &s).unwrap();
        let lo = corrupt_digital(&img, &DigitalParams::Jpeg { quality: 10 }, &s).unwrap();
        assert!(mean_l2(&img, &hi).unwrap() < mean_l2(&img, &lo).unwrap());
    }
}
