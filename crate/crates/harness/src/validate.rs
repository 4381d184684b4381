//! Prediction logs, label files and their validation against a manifest.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use corruptbench_core::metrics::{ClassId, RankedPrediction, MIN_TOPK};

use crate::error::{HarnessError, Result};
use crate::manifest::{Dataset, ItemSpec, Manifest};

/// Defects (errors) and notes (warnings) found by a check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.errors.extend(other.errors);
        self.warnings.extend(other.warnings);
    }

    /// One line per diagnostic, errors first.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.errors {
            let _ = writeln!(s, "error: {e}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    pub fn into_result(self) -> Result<Diagnostics> {
        if self.is_ok() {
            Ok(self)
        } else {
            let n = self.errors.len();
            Err(HarnessError::Validation(format!("{n} defect(s):\n{}", self.render().trim_end())))
        }
    }
}

// ---------------------------------------------------------------------------
// Files

/// Reads a line-delimited JSON prediction log. Blank lines are skipped.
pub fn read_predictions(path: &Path) -> Result<Vec<RankedPrediction>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_predictions(&text, path)
}

pub fn parse_predictions(text: &str, path: &Path) -> Result<Vec<RankedPrediction>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: RankedPrediction = serde_json::from_str(line).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, preds: &[RankedPrediction]) -> Result<()> {
    fs::write(path, predictions_jsonl(preds)).map_err(|e| HarnessError::io(path, e))
}

pub fn predictions_jsonl(preds: &[RankedPrediction]) -> String {
    let mut s = String::new();
    for p in preds {
        s += &serde_json::to_string(p).expect("prediction serializes");
        s.push('\n');
    }
    s
}

/// `id<TAB>class` lines; `#` comments and blank lines are ignored.
pub fn read_labels(path: &Path) -> Result<HashMap<String, ClassId>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_labels(&text, path)
}

pub fn parse_labels(text: &str, path: &Path) -> Result<HashMap<String, ClassId>> {
    let mut labels = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| HarnessError::Parse { path: path.to_path_buf(), line: i + 1, message };
        let Some((id, class)) = line.rsplit_once('\t') else {
            return Err(fail("expected `id<TAB>class`".into()));
        };
        let class: ClassId = class.trim().parse().map_err(|e| fail(format!("class id `{class}`: {e}")))?;
        if labels.insert(id.to_string(), class).is_some() {
            return Err(fail(format!("label for `{id}` given twice")));
        }
    }
    Ok(labels)
}

pub fn labels_tsv(labels: &BTreeMap<String, ClassId>) -> String {
    labels.iter().map(|(id, c)| format!("{id}\t{c}\n")).collect()
}

// ---------------------------------------------------------------------------
// Validation

/// Id under which clean-image predictions of a source are accepted.
pub fn clean_id(source_id: &str) -> String {
    format!("clean/{source_id}")
}

/// Checks a log against a manifest: every item/frame covered exactly once,
/// ids resolvable, frame indices in range and ranked lists well formed.
///
/// Clean predictions (`clean/<source id>`) are optional on corruption
/// manifests without clean records. Lists shorter than six are warnings on
/// perturbation manifests, where top-5 distance is computed.
pub fn validate_predictions(manifest: &Manifest, preds: &[RankedPrediction]) -> Diagnostics {
    let mut d = Diagnostics::default();
    let t5d = manifest.dataset == Dataset::Perturbations;
    let mut frames: HashMap<&str, usize> = manifest.records.iter().map(|r| (r.id.as_str(), r.frame_count())).collect();
    let optional: HashSet<String> = if manifest.dataset == Dataset::Corruptions && !manifest.has_clean_records() {
        manifest.sources.iter().map(|s| clean_id(&s.id)).collect()
    } else {
        HashSet::new()
    };
    for id in &optional {
        frames.insert(id.as_str(), 1);
    }

    let mut seen: HashSet<(&str, usize)> = HashSet::new();
    for p in preds {
        let Some(&n) = frames.get(p.id.as_str()) else {
            d.error(format!("unknown item id {}", p.id));
            continue;
        };
        if p.frame >= n {
            d.error(format!("{}#{}: frame index out of range (item has {n} frame(s))", p.id, p.frame));
            continue;
        }
        if !seen.insert((p.id.as_str(), p.frame)) {
            d.error(format!("{}#{}: duplicate record", p.id, p.frame));
            continue;
        }
        if p.topk.is_empty() {
            d.error(format!("{}#{}: empty ranked list", p.id, p.frame));
        } else if let Err(e) = p.validate() {
            d.error(e.to_string().trim_start_matches("validation error: ").to_string());
        } else if t5d && p.topk.len() < MIN_TOPK {
            d.warn(format!(
                "{}#{}: only {} ranked classes; top-5 distance needs at least {MIN_TOPK}",
                p.id,
                p.frame,
                p.topk.len()
            ));
        }
    }

    let mut missing = Vec::new();
    for r in &manifest.records {
        for f in 0..r.frame_count() {
            if !seen.contains(&(r.id.as_str(), f)) {
                missing.push(if r.frame_count() > 1 { format!("{}#{f}", r.id) } else { r.id.clone() });
            }
        }
    }
    for m in missing {
        d.error(format!("missing prediction for {m}"));
    }
    if manifest.dataset == Dataset::Corruptions {
        let clean = manifest
            .records
            .iter()
            .filter(|r| r.spec == ItemSpec::Clean)
            .count()
            + optional.iter().filter(|id| seen.contains(&(id.as_str(), 0))).count();
        if clean > 0 && clean < manifest.sources.len() {
            d.warn(format!("clean predictions cover {clean} of {} sources", manifest.sources.len()));
        }
    }
    d
}
