//! Severity and per-step parameter schedules.
//!
//! A [`Schedule`] holds five parameter tuples for every corruption kind and
//! one per-step magnitude for every perturbation kind. It round-trips through
//! a TOML file with one section per kind; its [`Schedule::hash`] is embedded
//! in every dataset manifest.
//!
//! Primary parameters are strictly monotone in the direction of increasing
//! distortion; secondary ones are non-strictly monotone or free. The bundled
//! defaults follow the usual common-corruption ladders, adjusted so that
//! corpus-mean distortion rises at every severity step
//! (`examples/calibrate.rs` prints the table).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corruptions::CorruptionKind;
use crate::error::{Error, Result};
use crate::imaging::Fill;
use crate::perturbations::PerturbationKind;

pub type Ladder = [f64; 5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub corruptions: CorruptionLadders,
    pub perturbations: PerturbationSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionLadders {
    pub gaussian_noise: Sigma,
    pub shot_noise: ShotNoise,
    pub impulse_noise: ImpulseNoise,
    pub defocus_blur: DefocusBlur,
    pub glass_blur: GlassBlur,
    pub motion_blur: MotionBlur,
    pub zoom_blur: ZoomBlur,
    pub snow: Snow,
    pub frost: Frost,
    pub fog: Fog,
    pub brightness: Brightness,
    pub contrast: Contrast,
    pub elastic: Elastic,
    pub pixelate: Pixelate,
    pub jpeg: Jpeg,
    pub speckle_noise: Sigma,
    pub gaussian_blur: Sigma,
    pub spatter: Spatter,
    pub saturate: Saturate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sigma {
    pub sigma: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotNoise {
    /// Photon-count scale λ; lower is noisier.
    pub photons: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseNoise {
    pub proportion: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefocusBlur {
    pub radius: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlassBlur {
    pub sigma: Ladder,
    pub max_delta: Ladder,
    pub iterations: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionBlur {
    pub length: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoomBlur {
    pub max_zoom: Ladder,
    pub step: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snow {
    /// Mean of the Gaussian flake field; higher means more flakes.
    pub density: Ladder,
    pub flake_std: Ladder,
    /// Upscaling applied to the flake field; larger flakes.
    pub flake_size: Ladder,
    pub threshold: Ladder,
    pub streak_length: Ladder,
    /// Weight kept on the original image before whitening; lower is whiter.
    pub image_blend: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frost {
    pub image_weight: Ladder,
    pub frost_weight: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fog {
    pub weight: Ladder,
    pub roughness: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Brightness {
    pub delta: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contrast {
    pub factor: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Elastic {
    /// RMS displacement in pixels.
    pub alpha: Ladder,
    pub smoothing: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pixelate {
    pub factor: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jpeg {
    pub quality: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spatter {
    /// Threshold on the unit-variance smoothed field; lower covers more.
    pub threshold: Ladder,
    pub blob_sigma: Ladder,
    pub opacity: Ladder,
    /// 0 = translucent water, 1 = opaque mud.
    pub mud: Ladder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Saturate {
    pub scale: Ladder,
    pub shift: Ladder,
}

/// Per-step magnitudes at normal difficulty. Hard sequences multiply every
/// magnitude by `hard_multiplier`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSteps {
    pub hard_multiplier: f64,
    /// Out-of-frame policy for geometric kinds.
    #[serde(default)]
    pub fill: Fill,
    /// Noise σ per frame.
    pub gaussian_noise: f64,
    /// Shot-noise strength `1/√λ` per frame.
    pub shot_noise: f64,
    pub speckle_noise: f64,
    /// Line-kernel length at the first step.
    pub motion_blur: f64,
    pub motion_blur_growth: f64,
    /// Largest zoom of the per-step zoom set, minus one.
    pub zoom_blur: f64,
    pub zoom_blur_growth: f64,
    /// Flake density of each added layer.
    pub snow: f64,
    pub brightness: f64,
    /// Pixels per step.
    pub translate: f64,
    /// Degrees per step.
    pub rotate: f64,
    /// Largest per-step plane rotation in degrees about either axis.
    pub tilt: f64,
    /// Per-step zoom factor minus one.
    pub scale: f64,
    pub shear: f64,
    pub gaussian_blur: f64,
    /// Opacity of each added water layer.
    pub spatter: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
}

const DEFAULT_TOML: &str = include_str!("../data/default_schedule.toml");

impl Default for Schedule {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TOML).expect("bundled schedule is valid")
    }
}

impl Schedule {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Schedule = toml::from_str(text).map_err(|e| Error::Format(format!("schedule: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schedule serializes")
    }

    /// SHA-256 of the canonical TOML rendering, so formatting differences in a
    /// user file do not change the hash.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Checks value domains and that every ladder moves monotonically towards
    /// more distortion; the first-listed parameter of each kind must be strict.
    pub fn validate(&self) -> Result<()> {
        use Direction::{Down, Up};
        let c = &self.corruptions;
        let checks: Vec<(&str, &str, &Ladder, Direction, bool)> = vec![
            ("gaussian_noise", "sigma", &c.gaussian_noise.sigma, Up, true),
            ("shot_noise", "photons", &c.shot_noise.photons, Down, true),
            ("impulse_noise", "proportion", &c.impulse_noise.proportion, Up, true),
            ("defocus_blur", "radius", &c.defocus_blur.radius, Up, true),
            ("glass_blur", "sigma", &c.glass_blur.sigma, Up, true),
            ("glass_blur", "max_delta", &c.glass_blur.max_delta, Up, false),
            ("glass_blur", "iterations", &c.glass_blur.iterations, Up, false),
            ("motion_blur", "length", &c.motion_blur.length, Up, true),
            ("zoom_blur", "max_zoom", &c.zoom_blur.max_zoom, Up, true),
            ("snow", "density", &c.snow.density, Up, true),
            ("snow", "flake_size", &c.snow.flake_size, Up, false),
            ("snow", "streak_length", &c.snow.streak_length, Up, false),
            ("snow", "image_blend", &c.snow.image_blend, Down, false),
            ("frost", "frost_weight", &c.frost.frost_weight, Up, true),
            ("frost", "image_weight", &c.frost.image_weight, Down, false),
            ("fog", "weight", &c.fog.weight, Up, true),
            ("fog", "roughness", &c.fog.roughness, Up, false),
            ("brightness", "delta", &c.brightness.delta, Up, true),
            ("contrast", "factor", &c.contrast.factor, Down, true),
            ("elastic", "alpha", &c.elastic.alpha, Up, true),
            ("elastic", "smoothing", &c.elastic.smoothing, Down, false),
            ("pixelate", "factor", &c.pixelate.factor, Up, true),
            ("jpeg", "quality", &c.jpeg.quality, Down, true),
            ("speckle_noise", "sigma", &c.speckle_noise.sigma, Up, true),
            ("gaussian_blur", "sigma", &c.gaussian_blur.sigma, Up, true),
            ("spatter", "threshold", &c.spatter.threshold, Down, true),
            ("spatter", "opacity", &c.spatter.opacity, Up, false),
            ("spatter", "mud", &c.spatter.mud, Up, false),
            ("saturate", "scale", &c.saturate.scale, Up, true),
            ("saturate", "shift", &c.saturate.shift, Up, false),
        ];
        for (kind, name, ladder, dir, strict) in checks {
            for pair in ladder.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let ok = match (dir, strict) {
                    (Up, true) => b > a,
                    (Up, false) => b >= a,
                    (Down, true) => b < a,
                    (Down, false) => b <= a,
                };
                if !ok {
                    return Err(Error::Validation(format!(
                        "schedule {kind}.{name} must be {} {:?}",
                        if strict { "strictly monotone" } else { "monotone" },
                        ladder
                    )));
                }
            }
            if ladder.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("schedule {kind}.{name} has non-finite values")));
            }
        }
        let in_unit = |kind: &str, l: &Ladder| -> Result<()> {
            if l.iter().all(|v| (0.0..=1.0).contains(v)) {
                Ok(())
            } else {
                Err(Error::Validation(format!("schedule {kind} values must lie in [0, 1]")))
            }
        };
        in_unit("impulse_noise.proportion", &c.impulse_noise.proportion)?;
        in_unit("fog.weight", &c.fog.weight)?;
        in_unit("spatter.opacity", &c.spatter.opacity)?;
        in_unit("snow.image_blend", &c.snow.image_blend)?;
        if c.jpeg.quality.iter().any(|q| !(1.0..=100.0).contains(q) || q.fract() != 0.0) {
            return Err(Error::Validation("schedule jpeg.quality must be integers in 1..=100".into()));
        }
        if c.shot_noise.photons.iter().any(|&l| l <= 0.0) {
            return Err(Error::Validation("schedule shot_noise.photons must be positive".into()));
        }
        if c.pixelate.factor.iter().any(|&d| d < 1.0) {
            return Err(Error::Validation("schedule pixelate.factor must be ≥ 1".into()));
        }
        if c.fog.roughness.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::Validation("schedule fog.roughness must lie in (0, 1]".into()));
        }
        if c.zoom_blur.max_zoom.iter().any(|&z| z < 1.0) || c.zoom_blur.step.iter().any(|&s| s <= 0.0) {
            return Err(Error::Validation("schedule zoom_blur needs max_zoom ≥ 1 and step > 0".into()));
        }
        let p = &self.perturbations;
        let steps = [
            p.hard_multiplier,
            p.gaussian_noise,
            p.shot_noise,
            p.speckle_noise,
            p.motion_blur,
            p.motion_blur_growth,
            p.zoom_blur,
            p.zoom_blur_growth,
            p.snow,
            p.brightness,
            p.translate,
            p.rotate,
            p.tilt,
            p.scale,
            p.shear,
            p.gaussian_blur,
            p.spatter,
        ];
        if steps.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("perturbation steps must be finite and non-negative".into()));
        }
        if p.hard_multiplier < 1.0 {
            return Err(Error::Validation("perturbations.hard_multiplier must be ≥ 1".into()));
        }
        Ok(())
    }

    /// The primary ladder of a corruption kind, used for reporting.
    pub fn primary_ladder(&self, kind: CorruptionKind) -> (&'static str, Ladder) {
        let c = &self.corruptions;
        match kind {
            CorruptionKind::GaussianNoise => ("sigma", c.gaussian_noise.sigma),
            CorruptionKind::ShotNoise => ("photons", c.shot_noise.photons),
            CorruptionKind::ImpulseNoise => ("proportion", c.impulse_noise.proportion),
            CorruptionKind::DefocusBlur => ("radius", c.defocus_blur.radius),
            CorruptionKind::GlassBlur => ("sigma", c.glass_blur.sigma),
            CorruptionKind::MotionBlur => ("length", c.motion_blur.length),
            CorruptionKind::ZoomBlur => ("max_zoom", c.zoom_blur.max_zoom),
            CorruptionKind::Snow => ("density", c.snow.density),
            CorruptionKind::Frost => ("frost_weight", c.frost.frost_weight),
            CorruptionKind::Fog => ("weight", c.fog.weight),
            CorruptionKind::Brightness => ("delta", c.brightness.delta),
            CorruptionKind::Contrast => ("factor", c.contrast.factor),
            CorruptionKind::Elastic => ("alpha", c.elastic.alpha),
            CorruptionKind::Pixelate => ("factor", c.pixelate.factor),
            CorruptionKind::Jpeg => ("quality", c.jpeg.quality),
            CorruptionKind::SpeckleNoise => ("sigma", c.speckle_noise.sigma),
            CorruptionKind::GaussianBlur => ("sigma", c.gaussian_blur.sigma),
            CorruptionKind::Spatter => ("threshold", c.spatter.threshold),
            CorruptionKind::Saturate => ("scale", c.saturate.scale),
        }
    }

    /// Per-step magnitude for a perturbation kind before the difficulty multiplier.
    pub fn step(&self, kind: PerturbationKind) -> f64 {
        let p = &self.perturbations;
        match kind {
            PerturbationKind::GaussianNoise => p.gaussian_noise,
            PerturbationKind::ShotNoise => p.shot_noise,
            PerturbationKind::SpeckleNoise => p.speckle_noise,
            PerturbationKind::MotionBlur => p.motion_blur,
            PerturbationKind::ZoomBlur => p.zoom_blur,
            PerturbationKind::Snow => p.snow,
            PerturbationKind::Brightness => p.brightness,
            PerturbationKind::Translate => p.translate,
            PerturbationKind::Rotate => p.rotate,
            PerturbationKind::Tilt => p.tilt,
            PerturbationKind::Scale => p.scale,
            PerturbationKind::Shear => p.shear,
            PerturbationKind::GaussianBlur => p.gaussian_blur,
            PerturbationKind::Spatter => p.spatter,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_is_valid_and_round_trips() {
        let s = Schedule::default();
        let back = Schedule::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let s = Schedule::default();
        let reformatted = format!("# comment\n\n{}", s.to_toml());
        assert_eq!(Schedule::from_toml(&reformatted).unwrap().hash(), s.hash());
        let mut t = s.clone();
        t.corruptions.fog.weight[4] = 0.71;
        assert_ne!(t.hash(), s.hash());
    }

    #[test]
    fn non_monotone_ladder_rejected() {
        let mut s = Schedule::default();
        s.corruptions.gaussian_noise.sigma = [0.1, 0.2, 0.2, 0.3, 0.4];
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
        let mut s = Schedule::default();
        s.corruptions.contrast.factor = [0.4, 0.5, 0.2, 0.1, 0.05];
        assert!(s.validate().is_err());
    }

    #[test]
    fn domain_violations_rejected() {
        let mut s = Schedule::default();
        s.corruptions.jpeg.quality = [125.0, 18.0, 15.0, 10.0, 7.0];
        assert!(s.validate().is_err());
        let mut s = Schedule::default();
        s.corruptions.fog.weight = [0.5, 0.6, 0.7, 0.8, 1.2];
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = Schedule::default().to_toml().replace("[corruptions.fog]", "[corruptions.fog]\nbogus = 1");
        assert!(Schedule::from_toml(&text).is_err());
    }

    #[test]
    fn every_kind_has_five_entries() {
        let s = Schedule::default();
        for kind in CorruptionKind::ALL {
            assert_eq!(s.primary_ladder(kind).1.len(), 5);
        }
    }
}
