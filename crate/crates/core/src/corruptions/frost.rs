//! Frost textures.
//!
//! The procedural texture is thresholded plasma noise plus sparse crystal
//! seeds smeared along a few random directions, sheared so the streaks lean
//! like ice crystals. User-supplied photographs can be used instead.

use rand::Rng;

use super::plasma::{diamond_square, plasma_side_for};
use crate::error::{param, Result};
use crate::imaging::warp::Fill;
use crate::imaging::{resample, warp, Field, Filter, ImageBuffer, Kernel2D, RandomStream};

/// Where frost overlays come from.
#[derive(Clone, Debug, Default)]
pub enum FrostSource {
    #[default]
    Procedural,
    Textures(Vec<ImageBuffer>),
}

const FROST_TINT: [f32; 3] = [0.86, 0.93, 1.0];
const OVERSCAN: f64 = 1.25;

/// A frost overlay of exactly `width`×`height`, randomly cropped and flipped.
pub fn frost_overlay(source: &FrostSource, width: usize, height: usize, stream: &RandomStream) -> Result<ImageBuffer> {
    let mut rng = stream.tag("frost-placement").rng();
    let big = match source {
        FrostSource::Procedural => {
            let tw = (width as f64 * OVERSCAN).ceil() as usize;
            let th = (height as f64 * OVERSCAN).ceil() as usize;
            procedural_texture(tw, th, &stream.tag("frost-texture"))?
        }
        FrostSource::Textures(textures) => {
            if textures.is_empty() {
                return param("frost texture list is empty");
            }
            let tex = &textures[rng.random_range(0..textures.len())];
            // Scale so the texture covers the target with some slack for cropping.
            let scale = (width as f64 / tex.width() as f64).max(height as f64 / tex.height() as f64).max(1.0);
            if scale > 1.0 {
                let tw = (tex.width() as f64 * scale).ceil() as usize;
                let th = (tex.height() as f64 * scale).ceil() as usize;
                resample(tex, tw, th, Filter::Bilinear)?
            } else {
                tex.clone()
            }
        }
    };
    let x0 = rng.random_range(0..=big.width() - width);
    let y0 = rng.random_range(0..=big.height() - height);
    let (fh, fv) = (rng.random::<bool>(), rng.random::<bool>());
    Ok(big.crop(x0, y0, width, height)?.flipped(fh, fv))
}

fn smoothstep(edge0: f32, edge1: f32, v: f32) -> f32 {
    let t = ((v - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn procedural_texture(width: usize, height: usize, stream: &RandomStream) -> Result<ImageBuffer> {
    let side = plasma_side_for(width.max(height));
    let plasma = diamond_square(side, 0.75, &stream.tag("plasma"))?;
    let (ox, oy) = ((side - width) / 2, (side - height) / 2);
    let base = Field::from_fn(width, height, |x, y| plasma.get(x + ox, y + oy) as f32);

    let mut rng = stream.tag("crystals").rng();
    let seeds = Field::from_fn(width, height, |_, _| {
        if rng.random::<f64>() < 0.006 {
            0.5 + 0.5 * rng.random::<f32>()
        } else {
            0.0
        }
    });
    let mut streaks = Field::new(width, height);
    for _ in 0..3 {
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let length = rng.random_range(8.0..18.0);
        let smeared = seeds.convolved(Kernel2D::line(length, angle)?);
        for (s, v) in streaks.data.iter_mut().zip(&smeared.data) {
            *s += v;
        }
    }
    let peak = streaks.max().max(1e-6);
    let shear = if rng.random::<bool>() { 0.3 } else { -0.3 };
    let raw = Field::from_fn(width, height, |x, y| {
        let i = y * width + x;
        0.6 * smoothstep(0.3, 0.85, base.data[i]) + 0.9 * (streaks.data[i] / peak).sqrt() * 0.8
    });
    let tex = raw.to_image();
    let cy = height as f64 / 2.0;
    let sheared = warp(&tex, Fill::Clamp, |x, y| (x + shear * (y - cy), y));
    Ok(sheared.map_pixels(|_, _, p| [p[0] * FROST_TINT[0], p[1] * FROST_TINT[1], p[2] * FROST_TINT[2]]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_has_requested_shape_and_varies_by_stream() {
        let a = frost_overlay(&FrostSource::Procedural, 48, 40, &RandomStream::new(1)).unwrap();
        let b = frost_overlay(&FrostSource::Procedural, 48, 40, &RandomStream::new(2)).unwrap();
        assert_eq!(a.dimensions(), (48, 40));
        assert_ne!(a, b);
    }

    #[test]
    fn user_texture_is_cropped_to_size() {
        let tex = ImageBuffer::from_fn(20, 10, |x, y| [x as f32 / 19.0, y as f32 / 9.0, 0.8]);
        let src = FrostSource::Textures(vec![tex]);
        let out = frost_overlay(&src, 32, 32, &RandomStream::new(3)).unwrap();
        assert_eq!(out.dimensions(), (32, 32));
        assert!(frost_overlay(&FrostSource::Textures(vec![]), 8, 8, &RandomStream::new(3)).is_err());
    }
}
