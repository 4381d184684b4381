//! Built-in deterministic classifiers for exercising the pipeline without an
//! ML framework.

use std::path::Path;
use std::str::FromStr;

use corruptbench_core::imaging::io::load_image;
use corruptbench_core::metrics::{ClassId, RankedPrediction};
use corruptbench_core::{ImageBuffer, RandomStream};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::generate::unstack;
use crate::manifest::{Layout, Manifest, Record};

pub const TOY_CLASSES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// The same ranking for every input.
    Constant,
    /// Top class equals the frame index, so every frame disagrees with every other.
    Flip,
    /// Nearest-prototype classifier over colour statistics.
    Toy,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Constant => "constant",
            Model::Flip => "flip",
            Model::Toy => "toy",
        }
    }
}

impl FromStr for Model {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [Model::Constant, Model::Flip, Model::Toy]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::Parameter(format!("unknown model `{s}` (constant, flip, toy)")))
    }
}

/// Six colour statistics: per-channel mean and standard deviation.
fn features(img: &ImageBuffer) -> [f64; 6] {
    let n = (img.width() * img.height()) as f64;
    let mut sum = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for px in img.data().chunks_exact(3) {
        for c in 0..3 {
            let v = f64::from(px[c]);
            sum[c] += v;
            sq[c] += v * v;
        }
    }
    let mut f = [0.0; 6];
    for c in 0..3 {
        let mean = sum[c] / n;
        f[c] = mean;
        f[3 + c] = (sq[c] / n - mean * mean).max(0.0).sqrt();
    }
    f
}

/// Class prototypes of the toy classifier.
pub struct ToyClassifier {
    prototypes: Vec<[f64; 6]>,
}

impl Default for ToyClassifier {
    fn default() -> Self {
        let mut rng = RandomStream::new(0).tag("toy-classifier").rng();
        let prototypes = (0..TOY_CLASSES)
            .map(|_| {
                let mut p = [0.0; 6];
                for (i, v) in p.iter_mut().enumerate() {
                    *v = rng.random::<f64>() * if i < 3 { 1.0 } else { 0.4 };
                }
                p
            })
            .collect();
        Self { prototypes }
    }
}

impl ToyClassifier {
    /// The `k` nearest prototypes, nearest first; ties go to the lower id.
    pub fn rank(&self, img: &ImageBuffer, k: usize) -> Vec<ClassId> {
        let f = features(img);
        let mut d: Vec<(f64, ClassId)> = self
            .prototypes
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum(), i as ClassId))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(k).map(|(_, c)| c).collect()
    }
}

fn record_frames(record: &Record, root: &Path, layout: Option<Layout>) -> Result<Vec<ImageBuffer>> {
    let load = |rel: &str| -> Result<ImageBuffer> {
        let path = root.join(rel);
        load_image(&path).map_err(|e| match e {
            corruptbench_core::Error::Io(io) => HarnessError::io(path, io),
            e => e.into(),
        })
    };
    match layout {
        Some(Layout::Stack) => unstack(&load(&record.outputs[0].path)?, record.frame_count()),
        _ => record.outputs.iter().map(|o| load(&o.path)).collect(),
    }
}

/// One prediction per manifest item and frame, in manifest order.
pub fn predict(manifest: &Manifest, root: &Path, model: Model, topk: usize) -> Result<Vec<RankedPrediction>> {
    if topk == 0 || topk > TOY_CLASSES {
        return Err(HarnessError::Parameter(format!("topk must be in 1..={TOY_CLASSES}, got {topk}")));
    }
    let toy = (model == Model::Toy).then(ToyClassifier::default);
    let per_record = |r: &Record| -> Result<Vec<RankedPrediction>> {
        let n = r.frame_count();
        let lists: Vec<Vec<ClassId>> = match model {
            Model::Constant => vec![(0..topk as ClassId).collect(); n],
            Model::Flip => (0..n).map(|j| (0..topk).map(|i| ((j + i) % TOY_CLASSES) as ClassId).collect()).collect(),
            Model::Toy => {
                let toy = toy.as_ref().expect("built for toy");
                record_frames(r, root, manifest.layout)?.iter().map(|f| toy.rank(f, topk)).collect()
            }
        };
        Ok(lists
            .into_iter()
            .enumerate()
            .map(|(frame, topk)| RankedPrediction { id: r.id.clone(), frame, topk, model: Some(model.name().into()) })
            .collect())
    };
    let all = manifest.records.par_iter().map(per_record).collect::<Result<Vec<_>>>()?;
    Ok(all.into_iter().flatten().collect())
}
