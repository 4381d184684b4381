//! Contrast-limited adaptive histogram equalization on the luma channel.
//!
//! Each tile of a `tiles_x × tiles_y` grid gets a 256-bin luma histogram,
//! clipped at `clip_limit × (tile pixels / 256)` with the excess spread
//! uniformly over all bins. The tile mapping is the classic
//! `(cdf(v) − cdf_min) / (N − cdf_min)`; tiles whose luma is a single level
//! map by the identity. Per-pixel output interpolates bilinearly between the
//! four nearest tile centres. Chroma (Cb, Cr) is kept.
//!
//! When the image does not divide evenly, the tile grid covers an edge-extended
//! copy of the image.

use super::buffer::ImageBuffer;
use super::color::{rgb_to_ycbcr, ycbcr_to_rgb};
use crate::error::{param, Result};

const BINS: usize = 256;

enum TileMap {
    Identity,
    Lut(Box<[f64; BINS]>),
}

impl TileMap {
    #[inline]
    fn apply(&self, y: f64) -> f64 {
        match self {
            TileMap::Identity => y,
            TileMap::Lut(lut) => lut[bin(y)],
        }
    }
}

#[inline]
fn bin(y: f64) -> usize {
    (y * (BINS - 1) as f64).round().clamp(0.0, (BINS - 1) as f64) as usize
}

pub fn clahe(img: &ImageBuffer, clip_limit: f64, tiles: (usize, usize)) -> Result<ImageBuffer> {
    if !(clip_limit > 0.0) || !clip_limit.is_finite() {
        return param(format!("clip limit must be positive, got {clip_limit}"));
    }
    let (tx, ty) = tiles;
    let (w, h) = img.dimensions();
    if tx == 0 || ty == 0 || tx > w || ty > h {
        return param(format!("tile grid {tx}x{ty} invalid for a {w}x{h} image"));
    }
    let ycc: Vec<[f64; 3]> = img.data().chunks_exact(3).map(|p| rgb_to_ycbcr([p[0], p[1], p[2]])).collect();
    let tile_w = w.div_ceil(tx);
    let tile_h = h.div_ceil(ty);

    let mut maps = Vec::with_capacity(tx * ty);
    for j in 0..ty {
        for i in 0..tx {
            let mut hist = [0.0f64; BINS];
            for yy in j * tile_h..(j + 1) * tile_h {
                for xx in i * tile_w..(i + 1) * tile_w {
                    let (sx, sy) = (xx.min(w - 1), yy.min(h - 1));
                    hist[bin(ycc[sy * w + sx][0])] += 1.0;
                }
            }
            maps.push(tile_map(hist, clip_limit, (tile_w * tile_h) as f64));
        }
    }
    if maps.iter().all(|m| matches!(m, TileMap::Identity)) {
        return Ok(img.clone());
    }

    let mut out = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        // Position relative to tile centres, clamped at the outer half-tiles.
        let gy = ((y as f64 + 0.5) / tile_h as f64 - 0.5).clamp(0.0, (ty - 1) as f64);
        let j0 = gy.floor() as usize;
        let j1 = (j0 + 1).min(ty - 1);
        let fy = gy - j0 as f64;
        for x in 0..w {
            let gx = ((x as f64 + 0.5) / tile_w as f64 - 0.5).clamp(0.0, (tx - 1) as f64);
            let i0 = gx.floor() as usize;
            let i1 = (i0 + 1).min(tx - 1);
            let fx = gx - i0 as f64;
            let [luma, cb, cr] = ycc[y * w + x];
            let m = |i: usize, j: usize| maps[j * tx + i].apply(luma);
            let top = m(i0, j0) * (1.0 - fx) + m(i1, j0) * fx;
            let bot = m(i0, j1) * (1.0 - fx) + m(i1, j1) * fx;
            let mapped = top * (1.0 - fy) + bot * fy;
            out.extend(ycbcr_to_rgb([mapped, cb, cr]));
        }
    }
    Ok(ImageBuffer::from_raw_clamped(w, h, out))
}

fn tile_map(mut hist: [f64; BINS], clip_limit: f64, n: f64) -> TileMap {
    if hist.iter().filter(|&&c| c > 0.0).count() <= 1 {
        return TileMap::Identity;
    }
    let limit = (clip_limit * n / BINS as f64).max(1.0);
    let mut excess = 0.0;
    for c in &mut hist {
        if *c > limit {
            excess += *c - limit;
            *c = limit;
        }
    }
    let share = excess / BINS as f64;
    let mut lut = Box::new([0.0f64; BINS]);
    let mut cdf = 0.0;
    let mut cdf_min = None;
    for (b, c) in hist.iter().enumerate() {
        let c = c + share;
        cdf += c;
        if cdf_min.is_none() && c > 0.0 {
            cdf_min = Some(cdf);
        }
        lut[b] = cdf;
    }
    let cdf_min = cdf_min.unwrap_or(0.0);
    let denom = cdf - cdf_min;
    if denom <= 0.0 {
        return TileMap::Identity;
    }
    for v in lut.iter_mut() {
        *v = ((*v - cdf_min) / denom).clamp(0.0, 1.0);
    }
    TileMap::Lut(lut)
}
