//! Perturbation sequences.
//!
//! Noise-mode sequences start with the clean image and follow it with
//! independent noisy copies of that same image. Temporal-mode sequences drift:
//! each frame is a small step away from the previous one.
//!
//! Geometric kinds (translate, rotate, scale, shear, tilt) are rendered by
//! composing the per-step transform `j` times and warping the source once.
//! That keeps frame `j` free of `j` rounds of interpolation blur while still
//! satisfying `frame j = step(frame j − 1)` up to resampling error. The other
//! temporal kinds are applied to the previous frame directly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corruptions::blur::{fit, gaussian_blur, zoom_blur};
use crate::corruptions::noise::{corrupt_noise, NoiseParams};
use crate::corruptions::weather::{brightness, spatter};
use crate::error::{param, Error, Result};
use crate::imaging::warp::Homography;
use crate::imaging::{convolve2d, warp, Boundary, Field, ImageBuffer, Kernel2D, RandomStream};
use crate::schedule::Schedule;

pub const MIN_FRAMES: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    GaussianNoise,
    ShotNoise,
    MotionBlur,
    ZoomBlur,
    Snow,
    Brightness,
    Translate,
    Rotate,
    Tilt,
    Scale,
    SpeckleNoise,
    GaussianBlur,
    Spatter,
    Shear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Noise,
    Temporal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    #[default]
    Normal,
    Hard,
}

impl Difficulty {
    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Normal => "normal",
            Difficulty::Hard => "hard",
        }
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Difficulty::Normal),
            "hard" => Ok(Difficulty::Hard),
            _ => param(format!("unknown difficulty `{s}` (expected normal or hard)")),
        }
    }
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 14] = [
        PerturbationKind::GaussianNoise,
        PerturbationKind::ShotNoise,
        PerturbationKind::MotionBlur,
        PerturbationKind::ZoomBlur,
        PerturbationKind::Snow,
        PerturbationKind::Brightness,
        PerturbationKind::Translate,
        PerturbationKind::Rotate,
        PerturbationKind::Tilt,
        PerturbationKind::Scale,
        PerturbationKind::SpeckleNoise,
        PerturbationKind::GaussianBlur,
        PerturbationKind::Spatter,
        PerturbationKind::Shear,
    ];

    /// The ten kinds scored by mFR and mT5D.
    pub const BENCHMARK: [PerturbationKind; 10] = [
        PerturbationKind::GaussianNoise,
        PerturbationKind::ShotNoise,
        PerturbationKind::MotionBlur,
        PerturbationKind::ZoomBlur,
        PerturbationKind::Snow,
        PerturbationKind::Brightness,
        PerturbationKind::Translate,
        PerturbationKind::Rotate,
        PerturbationKind::Tilt,
        PerturbationKind::Scale,
    ];

    pub const VALIDATION: [PerturbationKind; 4] = [
        PerturbationKind::SpeckleNoise,
        PerturbationKind::GaussianBlur,
        PerturbationKind::Spatter,
        PerturbationKind::Shear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::GaussianNoise => "gaussian_noise",
            PerturbationKind::ShotNoise => "shot_noise",
            PerturbationKind::MotionBlur => "motion_blur",
            PerturbationKind::ZoomBlur => "zoom_blur",
            PerturbationKind::Snow => "snow",
            PerturbationKind::Brightness => "brightness",
            PerturbationKind::Translate => "translate",
            PerturbationKind::Rotate => "rotate",
            PerturbationKind::Tilt => "tilt",
            PerturbationKind::Scale => "scale",
            PerturbationKind::SpeckleNoise => "speckle_noise",
            PerturbationKind::GaussianBlur => "gaussian_blur",
            PerturbationKind::Spatter => "spatter",
            PerturbationKind::Shear => "shear",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            PerturbationKind::GaussianNoise => "Gaussian Noise",
            PerturbationKind::ShotNoise => "Shot Noise",
            PerturbationKind::MotionBlur => "Motion Blur",
            PerturbationKind::ZoomBlur => "Zoom Blur",
            PerturbationKind::Snow => "Snow",
            PerturbationKind::Brightness => "Brightness",
            PerturbationKind::Translate => "Translate",
            PerturbationKind::Rotate => "Rotate",
            PerturbationKind::Tilt => "Tilt",
            PerturbationKind::Scale => "Scale",
            PerturbationKind::SpeckleNoise => "Speckle Noise",
            PerturbationKind::GaussianBlur => "Gaussian Blur",
            PerturbationKind::Spatter => "Spatter",
            PerturbationKind::Shear => "Shear",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            PerturbationKind::GaussianNoise | PerturbationKind::ShotNoise | PerturbationKind::SpeckleNoise => Mode::Noise,
            _ => Mode::Temporal,
        }
    }

    pub fn is_benchmark(self) -> bool {
        !Self::VALIDATION.contains(&self)
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown perturbation kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub n_frames: usize,
    pub difficulty: Difficulty,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, n_frames: usize, difficulty: Difficulty, seed: u64) -> Result<Self> {
        if n_frames < MIN_FRAMES {
            return param(format!("sequences need at least {MIN_FRAMES} frames, got {n_frames}"));
        }
        Ok(Self { kind, n_frames, difficulty, seed })
    }

    pub fn stream(&self) -> RandomStream {
        RandomStream::new(self.seed).tag(self.kind.name()).tag(self.difficulty.name())
    }

    /// Per-step magnitude from the schedule, scaled for hard difficulty.
    pub fn step(&self, schedule: &Schedule) -> f64 {
        let base = schedule.step(self.kind);
        match self.difficulty {
            Difficulty::Normal => base,
            Difficulty::Hard => base * schedule.perturbations.hard_multiplier,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSequence {
    pub spec: PerturbationSpec,
    pub mode: Mode,
    pub frames: Vec<ImageBuffer>,
}

impl PerturbationSequence {
    pub fn frame_pairs(&self, stride: usize) -> Result<Vec<(usize, usize)>> {
        frame_pairs(self.mode, self.frames.len(), stride)
    }
}

/// Frame index pairs compared by flip and top-5 metrics (0-based).
///
/// Temporal sequences compare each frame with the one `stride` frames back;
/// noise sequences compare every frame with the clean first frame.
pub fn frame_pairs(mode: Mode, n_frames: usize, stride: usize) -> Result<Vec<(usize, usize)>> {
    match (mode, stride) {
        (Mode::Temporal, 1 | 2) => Ok((stride..n_frames).map(|j| (j - stride, j)).collect()),
        (Mode::Noise, 1) => Ok((1..n_frames).map(|j| (0, j)).collect()),
        (Mode::Noise, _) => param("noise sequences are always anchored at the clean frame; stride must be 1"),
        (_, s) => param(format!("stride must be 1 or 2, got {s}")),
    }
}

pub fn generate_sequence(img: &ImageBuffer, spec: &PerturbationSpec, schedule: &Schedule) -> Result<PerturbationSequence> {
    generate_with_step(img, spec, schedule, spec.step(schedule))
}

/// Like [`generate_sequence`] with an explicit per-step magnitude.
pub fn generate_with_step(img: &ImageBuffer, spec: &PerturbationSpec, schedule: &Schedule, step: f64) -> Result<PerturbationSequence> {
    match spec.kind.mode() {
        Mode::Noise => noise_sequence(img, spec, step),
        Mode::Temporal => temporal_sequence(img, spec, schedule, step),
    }
}

pub fn gen_noise_sequence(img: &ImageBuffer, spec: &PerturbationSpec, schedule: &Schedule) -> Result<PerturbationSequence> {
    if spec.kind.mode() != Mode::Noise {
        return param(format!("`{}` is a temporal perturbation", spec.kind));
    }
    generate_sequence(img, spec, schedule)
}

pub fn gen_temporal_sequence(img: &ImageBuffer, spec: &PerturbationSpec, schedule: &Schedule) -> Result<PerturbationSequence> {
    if spec.kind.mode() != Mode::Temporal {
        return param(format!("`{}` is a noise perturbation", spec.kind));
    }
    generate_sequence(img, spec, schedule)
}

fn check(img: &ImageBuffer, spec: &PerturbationSpec, step: f64) -> Result<()> {
    img.ensure_benchmark_size()?;
    if spec.n_frames < MIN_FRAMES {
        return param(format!("sequences need at least {MIN_FRAMES} frames, got {}", spec.n_frames));
    }
    if !(step >= 0.0) || !step.is_finite() {
        return param(format!("per-step magnitude must be finite and non-negative, got {step}"));
    }
    Ok(())
}

fn noise_sequence(img: &ImageBuffer, spec: &PerturbationSpec, step: f64) -> Result<PerturbationSequence> {
    check(img, spec, step)?;
    let stream = spec.stream();
    let mut frames = Vec::with_capacity(spec.n_frames);
    frames.push(img.clone());
    for j in 1..spec.n_frames {
        let s = stream.tag(j as u64);
        let frame = match spec.kind {
            PerturbationKind::GaussianNoise => corrupt_noise(img, &NoiseParams::Gaussian { sigma: step }, &s)?,
            PerturbationKind::SpeckleNoise => corrupt_noise(img, &NoiseParams::Speckle { sigma: step }, &s)?,
            // Strength is 1/√λ, so the relative noise level scales linearly with the step.
            PerturbationKind::ShotNoise if step == 0.0 => img.clone(),
            PerturbationKind::ShotNoise => corrupt_noise(img, &NoiseParams::Shot { photons: 1.0 / (step * step) }, &s)?,
            _ => unreachable!("temporal kind in noise sequence"),
        };
        frames.push(frame);
    }
    Ok(PerturbationSequence { spec: *spec, mode: Mode::Noise, frames })
}

fn temporal_sequence(img: &ImageBuffer, spec: &PerturbationSpec, schedule: &Schedule, step: f64) -> Result<PerturbationSequence> {
    check(img, spec, step)?;
    let stream = spec.stream();
    let n = spec.n_frames;
    let (w, h) = img.dimensions();
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);

    let geometric = |per_step: &dyn Fn(f64) -> Homography| -> Vec<ImageBuffer> {
        (0..n)
            .map(|j| {
                if j == 0 {
                    return img.clone();
                }
                let m = per_step(j as f64);
                warp(img, schedule.perturbations.fill, |x, y| m.apply(x, y))
            })
            .collect()
    };

    let frames = match spec.kind {
        PerturbationKind::Translate => geometric(&|j| Homography::translation(j * step, 0.0)),
        PerturbationKind::Rotate => geometric(&|j| {
            let (s, c) = (j * step).to_radians().sin_cos();
            Homography::about(cx, cy, c, -s, s, c)
        }),
        PerturbationKind::Scale => geometric(&|j| {
            let z = (1.0 + step).powf(j);
            Homography::about(cx, cy, 1.0 / z, 0.0, 0.0, 1.0 / z)
        }),
        PerturbationKind::Shear => geometric(&|j| Homography::about(cx, cy, 1.0, j * step, 0.0, 1.0)),
        PerturbationKind::Tilt => {
            let mut rng = stream.tag("tilt-axes").rng();
            let ax = if step > 0.0 { rng.random_range(-step..=step) } else { 0.0 };
            let ay = if step > 0.0 { rng.random_range(-step..=step) } else { 0.0 };
            geometric(&|j| tilt_homography(w as f64, cx, cy, (j * ax).to_radians(), (j * ay).to_radians()))
        }
        _ => {
            let mut frames = Vec::with_capacity(n);
            frames.push(img.clone());
            let p = &schedule.perturbations;
            let angle = {
                let mut rng = stream.tag("motion-angle").rng();
                rng.random_range(-std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_4)
            };
            for j in 1..n {
                let prev = &frames[j - 1];
                let s = stream.tag(j as u64);
                let growth = 1.0 + (j - 1) as f64;
                let next = match spec.kind {
                    PerturbationKind::Brightness => brightness(prev, step),
                    PerturbationKind::GaussianBlur => gaussian_blur(prev, step)?,
                    PerturbationKind::MotionBlur => {
                        let length = step * (1.0 + p.motion_blur_growth * (growth - 1.0));
                        let k = fit(Kernel2D::line(length, angle)?, prev)?;
                        convolve2d(prev, &k, Boundary::Reflect)?
                    }
                    PerturbationKind::ZoomBlur => {
                        let z = step + p.zoom_blur_growth * (growth - 1.0);
                        zoom_blur(prev, &[1.0, 1.0 + z / 2.0, 1.0 + z])?
                    }
                    PerturbationKind::Snow => add_flakes(prev, step, &s),
                    PerturbationKind::Spatter => spatter(prev, 1.6, 3.0, step.min(1.0), false, &s)?,
                    _ => unreachable!("geometric or noise kind"),
                };
                frames.push(next);
            }
            frames
        }
    };
    Ok(PerturbationSequence { spec: *spec, mode: Mode::Temporal, frames })
}

/// Output-to-source map for the image plane rotated by `ax` about the
/// vertical axis and `ay` about the horizontal axis, viewed by a pinhole
/// camera with focal length `f` centred on the image.
fn tilt_homography(f: f64, cx: f64, cy: f64, ax: f64, ay: f64) -> Homography {
    let (sa, ca) = ax.sin_cos();
    let (sb, cb) = ay.sin_cos();
    // R = Ry(ax) · Rx(ay); the source lookup uses its transpose.
    let r = [[ca, sa * sb, sa * cb], [0.0, cb, -sb], [-sa, ca * sb, ca * cb]];
    let rt = [[r[0][0], r[1][0], r[2][0]], [r[0][1], r[1][1], r[2][1]], [r[0][2], r[1][2], r[2][2]]];
    let k = Homography([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]]);
    let k_inv = Homography([[1.0 / f, 0.0, -cx / f], [0.0, 1.0 / f, -cy / f], [0.0, 0.0, 1.0]]);
    k.compose(&Homography(rt)).compose(&k_inv)
}

/// Adds a sparse layer of short falling streaks; `density` is the fraction of
/// coarse cells that seed a flake.
fn add_flakes(img: &ImageBuffer, density: f64, stream: &RandomStream) -> ImageBuffer {
    let (w, h) = img.dimensions();
    let mut rng = stream.tag("flakes").rng();
    let seeds = Field::from_fn(w, h, |_, _| {
        if rng.random::<f64>() < density {
            rng.random_range(0.5f32..1.0)
        } else {
            0.0
        }
    });
    let angle = std::f64::consts::FRAC_PI_2 + rng.random_range(-0.3..0.3);
    let layer = seeds.convolved(Kernel2D::line(4.0, angle).expect("valid line"));
    img.map_pixels(|x, y, p| {
        let v = layer.data[y * w + x];
        p.map(|c| c + v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::mean_l2;

    fn scene() -> ImageBuffer {
        ImageBuffer::from_fn(32, 32, |x, y| [x as f32 / 31.0, y as f32 / 31.0, ((x / 4 + y / 4) % 2) as f32])
    }

    fn spec(kind: PerturbationKind) -> PerturbationSpec {
        PerturbationSpec::new(kind, 31, Difficulty::Normal, 11).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in PerturbationKind::ALL {
            assert_eq!(k.name().parse::<PerturbationKind>().unwrap(), k);
        }
        assert_eq!(PerturbationKind::ALL.iter().filter(|k| k.mode() == Mode::Noise).count(), 3);
    }

    #[test]
    fn short_sequences_rejected() {
        assert!(PerturbationSpec::new(PerturbationKind::Rotate, 30, Difficulty::Normal, 0).is_err());
    }

    #[test]
    fn pair_counts() {
        assert_eq!(frame_pairs(Mode::Temporal, 31, 1).unwrap().len(), 30);
        assert_eq!(frame_pairs(Mode::Temporal, 31, 2).unwrap().len(), 29);
        let noise = frame_pairs(Mode::Noise, 31, 1).unwrap();
        assert_eq!(noise.len(), 30);
        assert!(noise.iter().all(|&(a, _)| a == 0));
        assert!(frame_pairs(Mode::Noise, 31, 2).is_err());
        assert!(frame_pairs(Mode::Temporal, 31, 3).is_err());
    }

    #[test]
    fn wrong_mode_rejected() {
        let s = Schedule::default();
        assert!(gen_noise_sequence(&scene(), &spec(PerturbationKind::Rotate), &s).is_err());
        assert!(gen_temporal_sequence(&scene(), &spec(PerturbationKind::GaussianNoise), &s).is_err());
    }

    #[test]
    fn every_kind_has_the_right_length_and_clean_first_frame() {
        let s = Schedule::default();
        let img = scene();
        for k in PerturbationKind::ALL {
            let seq = generate_sequence(&img, &spec(k), &s).unwrap();
            assert_eq!(seq.frames.len(), 31, "{k}");
            assert_eq!(seq.frames[0], img, "{k}");
            assert!(seq.frames.iter().all(|f| f.dimensions() == img.dimensions()));
            assert_ne!(seq.frames[30], img, "{k} never moved");
        }
    }

    #[test]
    fn black_fill_darkens_uncovered_columns() {
        let mut s = Schedule::default();
        s.perturbations.fill = crate::imaging::Fill::Black;
        let img = ImageBuffer::filled(32, 32, [0.8, 0.8, 0.8]);
        let seq = generate_sequence(&img, &spec(PerturbationKind::Translate), &s).unwrap();
        // Frame j samples x + j, so the rightmost j columns fall outside.
        assert_eq!(seq.frames[3].pixel(31, 10), [0.0; 3]);
        assert_eq!(seq.frames[3].pixel(27, 10), [0.8; 3]);
        let clamped = generate_sequence(&img, &spec(PerturbationKind::Translate), &Schedule::default()).unwrap();
        assert_eq!(clamped.frames[3], img);
    }

    #[test]
    fn zero_step_freezes_every_kind() {
        let s = Schedule::default();
        let img = scene();
        for k in [
            PerturbationKind::GaussianNoise,
            PerturbationKind::ShotNoise,
            PerturbationKind::Rotate,
            PerturbationKind::Translate,
            PerturbationKind::Tilt,
            PerturbationKind::Shear,
            PerturbationKind::Scale,
        ] {
            let seq = generate_with_step(&img, &spec(k), &s, 0.0).unwrap();
            assert!(seq.frames.iter().all(|f| *f == img), "{k}");
        }
    }

    #[test]
    fn translate_slides_one_column() {
        let s = Schedule::default();
        let img = scene();
        let seq = generate_sequence(&img, &spec(PerturbationKind::Translate), &s).unwrap();
        for j in 1..31 {
            for y in 0..32 {
                for x in 0..31 {
                    assert_eq!(seq.frames[j].pixel(x, y), seq.frames[j - 1].pixel(x + 1, y));
                }
            }
        }
    }

    #[test]
    fn hard_moves_further() {
        let s = Schedule::default();
        let img = scene();
        let normal = generate_sequence(&img, &spec(PerturbationKind::Rotate), &s).unwrap();
        let hard_spec = PerturbationSpec { difficulty: Difficulty::Hard, ..spec(PerturbationKind::Rotate) };
        let hard = generate_sequence(&img, &hard_spec, &s).unwrap();
        assert!(mean_l2(&img, &hard.frames[1]).unwrap() > mean_l2(&img, &normal.frames[1]).unwrap());
    }

    #[test]
    fn tilt_at_zero_angle_is_identity() {
        let m = tilt_homography(100.0, 50.0, 40.0, 0.0, 0.0);
        let (x, y) = m.apply(13.0, 71.0);
        assert!((x - 13.0).abs() < 1e-12 && (y - 71.0).abs() < 1e-12);
    }
}
