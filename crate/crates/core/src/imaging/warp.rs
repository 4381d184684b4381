//! Inverse-mapped geometric warps with bilinear sampling.

use serde::{Deserialize, Serialize};

use super::buffer::ImageBuffer;

/// What to sample outside the source raster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    /// Repeat the nearest edge pixel.
    #[default]
    Clamp,
    Black,
}

/// Bilinear sample at continuous coordinates where pixel `(i, j)` is centred
/// on `(i + 0.5, j + 0.5)`.
#[inline]
pub fn sample_bilinear(img: &ImageBuffer, x: f64, y: f64, fill: Fill) -> [f32; 3] {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let fetch = |xi: isize, yi: isize| -> [f64; 3] {
        if (0..w).contains(&xi) && (0..h).contains(&yi) {
            img.pixel(xi as usize, yi as usize).map(f64::from)
        } else {
            match fill {
                Fill::Clamp => img.pixel(xi.clamp(0, w - 1) as usize, yi.clamp(0, h - 1) as usize).map(f64::from),
                Fill::Black => [0.0; 3],
            }
        }
    };
    let a = fetch(x0, y0);
    let b = fetch(x0 + 1, y0);
    let c = fetch(x0, y0 + 1);
    let d = fetch(x0 + 1, y0 + 1);
    let mut out = [0.0f32; 3];
    for k in 0..3 {
        let top = a[k] + (b[k] - a[k]) * tx;
        let bot = c[k] + (d[k] - c[k]) * tx;
        out[k] = (top + (bot - top) * ty) as f32;
    }
    out
}

/// Builds the output by sampling the source at `map(x, y)` for each output
/// pixel centre `(x + 0.5, y + 0.5)`.
pub fn warp(img: &ImageBuffer, fill: Fill, map: impl Fn(f64, f64) -> (f64, f64)) -> ImageBuffer {
    ImageBuffer::from_fn(img.width(), img.height(), |x, y| {
        let (sx, sy) = map(x as f64 + 0.5, y as f64 + 0.5);
        sample_bilinear(img, sx, sy, fill)
    })
}

/// Row-major 3×3 projective transform mapping output to source coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography(pub [[f64; 3]; 3]);

impl Homography {
    pub const IDENTITY: Homography = Homography([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.0;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        ((m[0][0] * x + m[0][1] * y + m[0][2]) / w, (m[1][0] * x + m[1][1] * y + m[1][2]) / w)
    }

    pub fn compose(&self, other: &Homography) -> Homography {
        let (a, b) = (&self.0, &other.0);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Homography(m)
    }

    pub fn translation(tx: f64, ty: f64) -> Homography {
        Homography([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])
    }

    /// Linear part `[[a, b], [c, d]]` applied about `(cx, cy)`.
    pub fn about(cx: f64, cy: f64, a: f64, b: f64, c: f64, d: f64) -> Homography {
        Homography::translation(cx, cy)
            .compose(&Homography([[a, b, 0.0], [c, d, 0.0], [0.0, 0.0, 1.0]]))
            .compose(&Homography::translation(-cx, -cy))
    }
}
