//! Dataset manifests: the record of every generated file.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use corruptbench_core::corruptions::CorruptionSpec;
use corruptbench_core::perturbations::{Difficulty, Mode, PerturbationSpec};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::sources::{sha256_file, sha256_hex};
use crate::validate::Diagnostics;

pub const MANIFEST_FORMAT: &str = "corruptbench-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const NOTICE: &str = "Evaluation data only. Do not train on these images.";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Corruptions,
    Perturbations,
}

/// How perturbation frames sit on disk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `<kind>/<id>/frame_XX.png`
    #[default]
    Directory,
    /// `<kind>/<id>.png`, frames stacked top to bottom.
    Stack,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub id: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItemSpec {
    Clean,
    Corruption(CorruptionSpec),
    Perturbation(PerturbationSpec),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Output {
    /// Relative to the manifest directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub source_id: String,
    pub spec: ItemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub outputs: Vec<Output>,
}

impl Record {
    /// Frames a prediction log must cover for this record.
    pub fn frame_count(&self) -> usize {
        match &self.spec {
            ItemSpec::Perturbation(p) => p.n_frames,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemError {
    pub id: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub benchmark_only: bool,
    pub notice: String,
    pub toolkit_version: String,
    pub dataset: Dataset,
    pub schedule_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    pub codec: String,
    pub source_root: String,
    pub seed: u64,
    pub image_format: String,
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frost: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Layout>,
    pub sources: Vec<SourceEntry>,
    pub records: Vec<Record>,
    pub complete: bool,
    pub errors: Vec<ItemError>,
}

impl Manifest {
    /// SHA-256 of the compact JSON encoding.
    pub fn content_hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("manifest serializes"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| HarnessError::Format(format!("manifest: {e}")))?;
        if m.format != MANIFEST_FORMAT {
            return Err(HarnessError::Format(format!(
                "manifest format `{}` is not supported (expected `{MANIFEST_FORMAT}`)",
                m.format
            )));
        }
        Ok(m)
    }

    /// Writes `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }

    /// Loads a manifest from its file or its directory. Returns the manifest
    /// and the directory its output paths are relative to.
    pub fn open(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
        let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, root))
    }

    pub fn record(&self, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn has_clean_records(&self) -> bool {
        self.records.iter().any(|r| r.spec == ItemSpec::Clean)
    }

    /// Checks structure and that every output exists with its recorded hash.
    pub fn verify(&self, root: &Path) -> Diagnostics {
        let mut d = Diagnostics::default();
        if !self.benchmark_only {
            d.warn("manifest is not flagged benchmark_only");
        }
        if !self.complete {
            d.error(format!("manifest is incomplete: {} item(s) failed during generation", self.errors.len()));
            for e in &self.errors {
                d.error(format!("generation of {} failed: {}", e.id, e.message));
            }
        }
        let mut ids = HashSet::new();
        let mut paths = HashSet::new();
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                d.error(format!("duplicate item id {}", r.id));
            }
            for o in &r.outputs {
                if !paths.insert(o.path.as_str()) {
                    d.error(format!("output {} is listed twice", o.path));
                }
                if Path::new(&o.path).is_absolute() || o.path.split('/').any(|c| c == "..") {
                    d.error(format!("output path {} escapes the dataset directory", o.path));
                    continue;
                }
                match sha256_file(&root.join(&o.path)) {
                    Ok(h) if h == o.sha256 => {}
                    Ok(_) => d.error(format!("{}: content hash mismatch (file modified after generation)", o.path)),
                    Err(e) => d.error(format!("{}: {e}", o.path)),
                }
            }
        }
        d
    }
}
