//! Snow, frost, fog, brightness and spatter.

use rand::Rng;

use super::frost::{frost_overlay, FrostSource};
use super::noise::normal;
use super::plasma::{diamond_square, plasma_side_for};
use crate::error::{param, Result};
use crate::imaging::color::{hsv_to_rgb_pixel, rgb_to_hsv_pixel};
use crate::imaging::{Field, ImageBuffer, Kernel2D, RandomStream};

#[derive(Clone, Debug, PartialEq)]
pub enum WeatherParams {
    Snow {
        density: f64,
        flake_std: f64,
        flake_size: f64,
        threshold: f64,
        streak_length: f64,
        image_blend: f64,
    },
    Frost { image_weight: f64, frost_weight: f64 },
    /// `out = (1 − w)·x + w·fog`, fog a plasma cloud scaled by the image's
    /// brightest sample.
    Fog { weight: f64, roughness: f64 },
    /// Additive shift of the HSV value channel.
    Brightness { delta: f64 },
    Spatter { threshold: f64, blob_sigma: f64, opacity: f64, mud: bool },
}

/// Darkest fog density; the cloud spans `[FOG_FLOOR, 1]` of the peak brightness.
const FOG_FLOOR: f64 = 0.5;

pub fn corrupt_weather(img: &ImageBuffer, params: &WeatherParams, stream: &RandomStream) -> Result<ImageBuffer> {
    corrupt_weather_with(img, params, &FrostSource::Procedural, stream)
}

pub fn corrupt_weather_with(
    img: &ImageBuffer,
    params: &WeatherParams,
    frost: &FrostSource,
    stream: &RandomStream,
) -> Result<ImageBuffer> {
    match *params {
        WeatherParams::Fog { weight, roughness } => fog(img, weight, roughness, stream),
        WeatherParams::Brightness { delta } => Ok(brightness(img, delta)),
        WeatherParams::Frost { image_weight, frost_weight } => {
            let overlay = frost_overlay(frost, img.width(), img.height(), stream)?;
            let (a, b) = (image_weight as f32, frost_weight as f32);
            Ok(img.map_pixels(|x, y, p| {
                let f = overlay.pixel(x, y);
                [a * p[0] + b * f[0], a * p[1] + b * f[1], a * p[2] + b * f[2]]
            }))
        }
        WeatherParams::Snow { density, flake_std, flake_size, threshold, streak_length, image_blend } => {
            if !(0.0..=1.0).contains(&image_blend) {
                return param(format!("snow image blend must lie in [0, 1], got {image_blend}"));
            }
            let layer = snow_layer(img.width(), img.height(), density, flake_std, flake_size, threshold, streak_length, stream)?;
            Ok(composite_snow(img, &layer, image_blend as f32))
        }
        WeatherParams::Spatter { threshold, blob_sigma, opacity, mud } => {
            spatter(img, threshold, blob_sigma, opacity, mud, stream)
        }
    }
}

fn fog(img: &ImageBuffer, weight: f64, roughness: f64, stream: &RandomStream) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&weight) {
        return param(format!("fog weight must lie in [0, 1], got {weight}"));
    }
    if weight == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dimensions();
    let side = plasma_side_for(w.max(h));
    let map = diamond_square(side, roughness, &stream.tag("fog"))?;
    let (ox, oy) = ((side - w) / 2, (side - h) / 2);
    let peak = f64::from(img.data().iter().copied().fold(0.0f32, f32::max));
    Ok(img.map_pixels(|x, y, p| {
        let cloud = peak * (FOG_FLOOR + (1.0 - FOG_FLOOR) * map.get(x + ox, y + oy));
        p.map(|v| ((1.0 - weight) * f64::from(v) + weight * cloud) as f32)
    }))
}

pub(crate) fn brightness(img: &ImageBuffer, delta: f64) -> ImageBuffer {
    let d = delta as f32;
    img.map_pixels(|_, _, p| {
        let [h, s, v] = rgb_to_hsv_pixel(p);
        hsv_to_rgb_pixel([h, s, (v + d).clamp(0.0, 1.0)])
    })
}

/// Thresholded Gaussian flake field, upscaled and smeared into streaks.
#[allow(clippy::too_many_arguments)]
pub(crate) fn snow_layer(
    width: usize,
    height: usize,
    density: f64,
    flake_std: f64,
    flake_size: f64,
    threshold: f64,
    streak_length: f64,
    stream: &RandomStream,
) -> Result<Field> {
    if !(flake_size >= 1.0) || !(flake_std >= 0.0) {
        return param(format!("snow needs flake_size ≥ 1 and flake_std ≥ 0, got {flake_size}, {flake_std}"));
    }
    let mut rng = stream.tag("snow-flakes").rng();
    let sw = ((width as f64 / flake_size).ceil() as usize).max(1);
    let sh = ((height as f64 / flake_size).ceil() as usize).max(1);
    let small = Field::from_fn(sw, sh, |_, _| (density + flake_std * normal(&mut rng)).clamp(0.0, 1.0) as f32);
    let mut layer = small.resized(width, height);
    let t = threshold as f32;
    for v in &mut layer.data {
        if *v < t {
            *v = 0.0;
        }
    }
    let mut rng = stream.tag("snow-angle").rng();
    let angle = std::f64::consts::FRAC_PI_2 + rng.random_range(-std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_4);
    Ok(layer.convolved(Kernel2D::line(streak_length, angle)?))
}

/// Whitens the image slightly, then adds the flake layer and its half-turn.
pub(crate) fn composite_snow(img: &ImageBuffer, layer: &Field, image_blend: f32) -> ImageBuffer {
    let flipped = layer.rotated_half_turn();
    let luma = img.luma();
    let w = img.width();
    img.map_pixels(|x, y, p| {
        let i = y * w + x;
        let lifted = luma[i] * 1.5 + 0.5;
        let flake = layer.data[i] + flipped.data[i];
        p.map(|v| image_blend * v + (1.0 - image_blend) * v.max(lifted) + flake)
    })
}

/// Soft mask from a smoothed unit-variance Gaussian field.
pub(crate) fn spatter_mask(width: usize, height: usize, threshold: f64, blob_sigma: f64, stream: &RandomStream) -> Field {
    let mut rng = stream.tag("spatter-field").rng();
    let raw = Field::from_fn(width, height, |_, _| normal(&mut rng) as f32);
    let smooth = raw.blurred(blob_sigma);
    let (mean, std) = smooth.mean_std();
    let std = std.max(1e-9);
    Field::from_fn(width, height, |x, y| {
        let z = (f64::from(smooth.get(x, y)) - mean) / std;
        let t = ((z - threshold) / 0.35).clamp(0.0, 1.0);
        (t * t * (3.0 - 2.0 * t)) as f32
    })
}

const WATER_TINT: [f32; 3] = [0.78, 0.86, 0.95];

pub(crate) fn spatter(
    img: &ImageBuffer,
    threshold: f64,
    blob_sigma: f64,
    opacity: f64,
    mud: bool,
    stream: &RandomStream,
) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&opacity) {
        return param(format!("spatter opacity must lie in [0, 1], got {opacity}"));
    }
    if !(blob_sigma > 0.0) {
        return param(format!("spatter blob sigma must be positive, got {blob_sigma}"));
    }
    let mask = spatter_mask(img.width(), img.height(), threshold, blob_sigma, stream);
    let a = opacity as f32;
    let w = img.width();
    if mud {
        let mut rng = stream.tag("spatter-colour").rng();
        let jitter = rng.random_range(-0.06f32..0.06);
        let colour = [0.36 + jitter, 0.26 + jitter, 0.16 + jitter * 0.5];
        Ok(img.map_pixels(|x, y, p| {
            let m = a * mask.data[y * w + x];
            [0, 1, 2].map(|c| p[c] * (1.0 - m) + colour[c] * m)
        }))
    } else {
        // Translucent water: lighten towards a cool tint, with a rim highlight
        // where the mask gradient is steep.
        let h = img.height();
        Ok(img.map_pixels(|x, y, p| {
            let m = a * mask.data[y * w + x];
            let up = mask.data[y.saturating_sub(1) * w + x];
            let down = mask.data[(y + 1).min(h - 1) * w + x];
            let rim = (up - down).max(0.0) * a * 0.5;
            [0, 1, 2].map(|c| p[c] * (1.0 - m) + m * (0.55 * p[c] + 0.45 * WATER_TINT[c]) + rim)
        }))
    }
}
