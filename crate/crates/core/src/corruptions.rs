//! The nineteen corruption kinds and their severity-indexed dispatch.
//!
//! The first fifteen kinds in [`CorruptionKind::ALL`] make up the benchmark;
//! the last four are held out for validation. Each kind is a pure function of
//! the image, the [`CorruptionSpec`] and the [`Schedule`]: all randomness is
//! drawn from a [`RandomStream`] keyed by the spec's seed, kind and severity.

pub mod blur;
pub mod digital;
pub mod frost;
pub mod noise;
pub mod plasma;
pub mod weather;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use blur::{corrupt_blur, BlurParams};
pub use digital::{corrupt_digital, DigitalParams};
pub use frost::{frost_overlay, FrostSource};
pub use noise::{corrupt_noise, NoiseParams};
pub use plasma::{diamond_square, Heightmap};
pub use weather::{corrupt_weather, corrupt_weather_with, WeatherParams};

use crate::error::{param, Error, Result};
use crate::imaging::{ImageBuffer, RandomStream};
use crate::schedule::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    DefocusBlur,
    GlassBlur,
    MotionBlur,
    ZoomBlur,
    Snow,
    Frost,
    Fog,
    Brightness,
    Contrast,
    Elastic,
    Pixelate,
    Jpeg,
    SpeckleNoise,
    GaussianBlur,
    Spatter,
    Saturate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    Noise,
    Blur,
    Weather,
    Digital,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 19] = [
        CorruptionKind::GaussianNoise,
        CorruptionKind::ShotNoise,
        CorruptionKind::ImpulseNoise,
        CorruptionKind::DefocusBlur,
        CorruptionKind::GlassBlur,
        CorruptionKind::MotionBlur,
        CorruptionKind::ZoomBlur,
        CorruptionKind::Snow,
        CorruptionKind::Frost,
        CorruptionKind::Fog,
        CorruptionKind::Brightness,
        CorruptionKind::Contrast,
        CorruptionKind::Elastic,
        CorruptionKind::Pixelate,
        CorruptionKind::Jpeg,
        CorruptionKind::SpeckleNoise,
        CorruptionKind::GaussianBlur,
        CorruptionKind::Spatter,
        CorruptionKind::Saturate,
    ];

    pub const BENCHMARK: [CorruptionKind; 15] = {
        let mut out = [CorruptionKind::GaussianNoise; 15];
        let mut i = 0;
        while i < 15 {
            out[i] = Self::ALL[i];
            i += 1;
        }
        out
    };

    pub const VALIDATION: [CorruptionKind; 4] = [
        CorruptionKind::SpeckleNoise,
        CorruptionKind::GaussianBlur,
        CorruptionKind::Spatter,
        CorruptionKind::Saturate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::GaussianNoise => "gaussian_noise",
            CorruptionKind::ShotNoise => "shot_noise",
            CorruptionKind::ImpulseNoise => "impulse_noise",
            CorruptionKind::DefocusBlur => "defocus_blur",
            CorruptionKind::GlassBlur => "glass_blur",
            CorruptionKind::MotionBlur => "motion_blur",
            CorruptionKind::ZoomBlur => "zoom_blur",
            CorruptionKind::Snow => "snow",
            CorruptionKind::Frost => "frost",
            CorruptionKind::Fog => "fog",
            CorruptionKind::Brightness => "brightness",
            CorruptionKind::Contrast => "contrast",
            CorruptionKind::Elastic => "elastic",
            CorruptionKind::Pixelate => "pixelate",
            CorruptionKind::Jpeg => "jpeg",
            CorruptionKind::SpeckleNoise => "speckle_noise",
            CorruptionKind::GaussianBlur => "gaussian_blur",
            CorruptionKind::Spatter => "spatter",
            CorruptionKind::Saturate => "saturate",
        }
    }

    /// Human-readable column title, e.g. "Gaussian Noise".
    pub fn title(self) -> &'static str {
        match self {
            CorruptionKind::GaussianNoise => "Gaussian Noise",
            CorruptionKind::ShotNoise => "Shot Noise",
            CorruptionKind::ImpulseNoise => "Impulse Noise",
            CorruptionKind::DefocusBlur => "Defocus Blur",
            CorruptionKind::GlassBlur => "Glass Blur",
            CorruptionKind::MotionBlur => "Motion Blur",
            CorruptionKind::ZoomBlur => "Zoom Blur",
            CorruptionKind::Snow => "Snow",
            CorruptionKind::Frost => "Frost",
            CorruptionKind::Fog => "Fog",
            CorruptionKind::Brightness => "Brightness",
            CorruptionKind::Contrast => "Contrast",
            CorruptionKind::Elastic => "Elastic",
            CorruptionKind::Pixelate => "Pixelate",
            CorruptionKind::Jpeg => "JPEG",
            CorruptionKind::SpeckleNoise => "Speckle Noise",
            CorruptionKind::GaussianBlur => "Gaussian Blur",
            CorruptionKind::Spatter => "Spatter",
            CorruptionKind::Saturate => "Saturate",
        }
    }

    pub fn is_benchmark(self) -> bool {
        !Self::VALIDATION.contains(&self)
    }

    pub fn category(self) -> Category {
        use CorruptionKind::*;
        match self {
            GaussianNoise | ShotNoise | ImpulseNoise | SpeckleNoise => Category::Noise,
            DefocusBlur | GlassBlur | MotionBlur | ZoomBlur | GaussianBlur => Category::Blur,
            Snow | Frost | Fog | Brightness | Spatter => Category::Weather,
            Contrast | Elastic | Pixelate | Jpeg | Saturate => Category::Digital,
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown corruption kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: u8,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: u8, seed: u64) -> Result<Self> {
        if !(1..=5).contains(&severity) {
            return param(format!("severity must be in 1..=5, got {severity}"));
        }
        Ok(Self { kind, severity, seed })
    }

    /// The stream every random draw of this spec comes from.
    pub fn stream(&self) -> RandomStream {
        RandomStream::new(self.seed).tag(self.kind.name()).tag(u64::from(self.severity))
    }
}

/// Concrete parameters of one corruption at one severity.
#[derive(Clone, Debug, PartialEq)]
pub enum CorruptionParams {
    Noise(NoiseParams),
    Blur(BlurParams),
    Weather(WeatherParams),
    Digital(DigitalParams),
}

impl CorruptionParams {
    pub fn from_schedule(schedule: &Schedule, kind: CorruptionKind, severity: u8) -> Result<Self> {
        if !(1..=5).contains(&severity) {
            return param(format!("severity must be in 1..=5, got {severity}"));
        }
        let i = usize::from(severity - 1);
        let c = &schedule.corruptions;
        use CorruptionKind as K;
        Ok(match kind {
            K::GaussianNoise => Self::Noise(NoiseParams::Gaussian { sigma: c.gaussian_noise.sigma[i] }),
            K::ShotNoise => Self::Noise(NoiseParams::Shot { photons: c.shot_noise.photons[i] }),
            K::ImpulseNoise => Self::Noise(NoiseParams::Impulse { proportion: c.impulse_noise.proportion[i] }),
            K::SpeckleNoise => Self::Noise(NoiseParams::Speckle { sigma: c.speckle_noise.sigma[i] }),
            K::DefocusBlur => Self::Blur(BlurParams::Defocus { radius: c.defocus_blur.radius[i] }),
            K::GlassBlur => Self::Blur(BlurParams::Glass {
                sigma: c.glass_blur.sigma[i],
                max_delta: c.glass_blur.max_delta[i] as usize,
                iterations: c.glass_blur.iterations[i] as usize,
            }),
            K::MotionBlur => Self::Blur(BlurParams::Motion { length: c.motion_blur.length[i], angle: None }),
            K::ZoomBlur => Self::Blur(BlurParams::zoom_ladder(c.zoom_blur.max_zoom[i], c.zoom_blur.step[i])),
            K::GaussianBlur => Self::Blur(BlurParams::Gaussian { sigma: c.gaussian_blur.sigma[i] }),
            K::Snow => {
                let s = &c.snow;
                Self::Weather(WeatherParams::Snow {
                    density: s.density[i],
                    flake_std: s.flake_std[i],
                    flake_size: s.flake_size[i],
                    threshold: s.threshold[i],
                    streak_length: s.streak_length[i],
                    image_blend: s.image_blend[i],
                })
            }
            K::Frost => Self::Weather(WeatherParams::Frost {
                image_weight: c.frost.image_weight[i],
                frost_weight: c.frost.frost_weight[i],
            }),
            K::Fog => Self::Weather(WeatherParams::Fog { weight: c.fog.weight[i], roughness: c.fog.roughness[i] }),
            K::Brightness => Self::Weather(WeatherParams::Brightness { delta: c.brightness.delta[i] }),
            K::Spatter => Self::Weather(WeatherParams::Spatter {
                threshold: c.spatter.threshold[i],
                blob_sigma: c.spatter.blob_sigma[i],
                opacity: c.spatter.opacity[i],
                mud: c.spatter.mud[i] >= 0.5,
            }),
            K::Contrast => Self::Digital(DigitalParams::Contrast { factor: c.contrast.factor[i] }),
            K::Elastic => Self::Digital(DigitalParams::Elastic {
                alpha: c.elastic.alpha[i],
                smoothing: c.elastic.smoothing[i],
            }),
            K::Pixelate => Self::Digital(DigitalParams::Pixelate { factor: c.pixelate.factor[i] }),
            K::Jpeg => Self::Digital(DigitalParams::Jpeg { quality: c.jpeg.quality[i] as u8 }),
            K::Saturate => Self::Digital(DigitalParams::Saturate {
                scale: c.saturate.scale[i],
                shift: c.saturate.shift[i],
            }),
        })
    }
}

/// Applies corruptions under one schedule, optionally with user frost textures.
#[derive(Clone, Debug, Default)]
pub struct Corruptor {
    pub schedule: Schedule,
    pub frost: FrostSource,
}

impl Corruptor {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule, frost: FrostSource::Procedural }
    }

    pub fn with_frost_textures(mut self, textures: Vec<ImageBuffer>) -> Self {
        self.frost = FrostSource::Textures(textures);
        self
    }

    pub fn apply(&self, img: &ImageBuffer, spec: &CorruptionSpec) -> Result<ImageBuffer> {
        let params = CorruptionParams::from_schedule(&self.schedule, spec.kind, spec.severity)?;
        self.apply_params(img, &params, &spec.stream())
    }

    /// Runs explicit parameters, bypassing the schedule.
    pub fn apply_params(&self, img: &ImageBuffer, params: &CorruptionParams, stream: &RandomStream) -> Result<ImageBuffer> {
        img.ensure_benchmark_size()?;
        // Every buffer constructor clamps, so outputs are already in range.
        Ok(match params {
            CorruptionParams::Noise(p) => corrupt_noise(img, p, stream)?,
            CorruptionParams::Blur(p) => corrupt_blur(img, p, stream)?,
            CorruptionParams::Weather(p) => corrupt_weather_with(img, p, &self.frost, stream)?,
            CorruptionParams::Digital(p) => corrupt_digital(img, p, stream)?,
        })
    }
}

pub fn apply_corruption(img: &ImageBuffer, spec: &CorruptionSpec, schedule: &Schedule) -> Result<ImageBuffer> {
    let params = CorruptionParams::from_schedule(schedule, spec.kind, spec.severity)?;
    Corruptor::default().apply_params(img, &params, &spec.stream())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::mean_l2;

    fn scene(tag: u64) -> ImageBuffer {
        let mut rng = RandomStream::new(tag).rng();
        use rand::Rng;
        let base: [f32; 3] = [rng.random(), rng.random(), rng.random()];
        ImageBuffer::from_fn(40, 36, |x, y| {
            [
                (base[0] + x as f32 / 80.0) % 1.0,
                (base[1] + ((x / 5 + y / 5) % 2) as f32 * 0.4) % 1.0,
                (base[2] + y as f32 / 72.0) % 1.0,
            ]
        })
    }

    #[test]
    fn names_round_trip_and_split() {
        for k in CorruptionKind::ALL {
            assert_eq!(k.name().parse::<CorruptionKind>().unwrap(), k);
        }
        assert_eq!(CorruptionKind::BENCHMARK.iter().filter(|k| k.is_benchmark()).count(), 15);
        assert!(CorruptionKind::VALIDATION.iter().all(|k| !k.is_benchmark()));
        assert!("rain".parse::<CorruptionKind>().is_err());
    }

    #[test]
    fn severity_out_of_range_is_rejected() {
        assert!(CorruptionSpec::new(CorruptionKind::Fog, 0, 1).is_err());
        assert!(CorruptionSpec::new(CorruptionKind::Fog, 6, 1).is_err());
    }

    #[test]
    fn every_kind_preserves_shape_range_and_is_deterministic() {
        let schedule = Schedule::default();
        let img = scene(1);
        for k in CorruptionKind::ALL {
            for s in [1, 5] {
                let spec = CorruptionSpec::new(k, s, 7).unwrap();
                let a = apply_corruption(&img, &spec, &schedule).unwrap();
                let b = apply_corruption(&img, &spec, &schedule).unwrap();
                assert_eq!(a.dimensions(), img.dimensions(), "{k}");
                assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)), "{k}");
                assert_eq!(a, b, "{k} s{s}");
                assert!(mean_l2(&img, &a).unwrap() > 0.0, "{k} s{s} left the image untouched");
            }
        }
    }

    #[test]
    fn tiny_images_are_rejected() {
        let img = ImageBuffer::new(8, 8);
        let spec = CorruptionSpec::new(CorruptionKind::Fog, 1, 0).unwrap();
        assert!(apply_corruption(&img, &spec, &Schedule::default()).is_err());
    }
}
