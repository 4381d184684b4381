//! Scoring a validated prediction log against a manifest.

use std::collections::{BTreeMap, HashMap};

use corruptbench_core::metrics::{
    error_table, pooled_flip_probability, pooled_ut5d, BaselineProfile, ClassId, Group, PerturbationMeasure,
    RankedPrediction, RobustnessReport, MIN_TOPK,
};
use corruptbench_core::corruptions::CorruptionKind;
use corruptbench_core::perturbations::{Mode, PerturbationKind};

use crate::error::{HarnessError, Result};
use crate::manifest::{Dataset, ItemSpec, Manifest};
use crate::validate::{clean_id, validate_predictions, Diagnostics};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Frame distance for temporal sequences (1 or 2). Noise sequences always
    /// compare against frame 0.
    pub stride: usize,
    /// Fail unless clean predictions make Relative mCE computable.
    pub require_relative: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { stride: 1, require_relative: false }
    }
}

/// Validates, then scores. Warnings from validation and scoring come back
/// alongside the report.
pub fn evaluate(
    manifest: &Manifest,
    preds: &[RankedPrediction],
    labels: Option<&HashMap<String, ClassId>>,
    baseline: &BaselineProfile,
    opts: &EvalOptions,
) -> Result<(RobustnessReport, Diagnostics)> {
    if !(1..=2).contains(&opts.stride) {
        return Err(HarnessError::Parameter(format!("stride must be 1 or 2, got {}", opts.stride)));
    }
    let mut diag = validate_predictions(manifest, preds).into_result()?;
    let mut report = RobustnessReport::new(baseline);
    report.manifest_hash = Some(manifest.content_hash());
    match manifest.dataset {
        Dataset::Corruptions => {
            let labels = labels.ok_or_else(|| {
                HarnessError::Parameter("corruption manifests need a labels file (--labels)".into())
            })?;
            score_corruptions(manifest, preds, labels, baseline, opts, &mut report, &mut diag)?;
        }
        Dataset::Perturbations => {
            report.difficulty = manifest.difficulty.map(|d| d.name().to_string());
            report.stride = Some(opts.stride as u8);
            score_perturbations(manifest, preds, baseline, opts, &mut report, &mut diag)?;
        }
    }
    Ok((report, diag))
}

fn score_corruptions(
    manifest: &Manifest,
    preds: &[RankedPrediction],
    labels: &HashMap<String, ClassId>,
    baseline: &BaselineProfile,
    opts: &EvalOptions,
    report: &mut RobustnessReport,
    diag: &mut Diagnostics,
) -> Result<()> {
    let mut groups: HashMap<String, Group> = HashMap::new();
    let mut item_labels: HashMap<String, ClassId> = HashMap::new();
    let mut missing = Vec::new();
    let mut add = |id: &str, source_id: &str, group: Group| {
        // Labels may be keyed by item id or by source id.
        match labels.get(id).or_else(|| labels.get(source_id)) {
            Some(&c) => {
                item_labels.insert(id.to_string(), c);
            }
            None => missing.push(id.to_string()),
        }
        groups.insert(id.to_string(), group);
    };
    for r in &manifest.records {
        match &r.spec {
            ItemSpec::Clean => add(&r.id, &r.source_id, Group::Clean),
            ItemSpec::Corruption(s) => add(&r.id, &r.source_id, Group::Corrupted(s.kind, s.severity)),
            ItemSpec::Perturbation(_) => {
                return Err(HarnessError::Format(format!("perturbation record {} in a corruption manifest", r.id)))
            }
        }
    }
    if !manifest.has_clean_records() {
        let present: std::collections::HashSet<&str> = preds.iter().map(|p| p.id.as_str()).collect();
        for s in &manifest.sources {
            let id = clean_id(&s.id);
            if present.contains(id.as_str()) {
                add(&id, &s.id, Group::Clean);
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(HarnessError::Validation(format!(
            "no label for {} item(s): {}",
            missing.len(),
            missing.iter().take(10).cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    let table = error_table(preds, &item_labels, &groups)?;
    if opts.require_relative && table.clean_error().is_none() {
        return Err(HarnessError::Validation(
            "Relative mCE needs the clean error E_clean: add clean-image predictions (ids `clean/<source id>`) or generate with --with-clean".into(),
        ));
    }
    report.add_corruptions(&table, baseline)?;
    let mut severities: BTreeMap<CorruptionKind, Vec<u8>> = BTreeMap::new();
    for g in groups.values() {
        if let Group::Corrupted(kind, sev) = *g {
            severities.entry(kind).or_default().push(sev);
        }
    }
    for (kind, mut sevs) in severities {
        sevs.sort_unstable();
        sevs.dedup();
        if sevs.len() < 5 {
            let have: Vec<String> = sevs.iter().map(u8::to_string).collect();
            diag.warn(format!("{kind}: CE needs severities 1-5, dataset has {}; not scored", have.join(",")));
        }
    }
    Ok(())
}

fn score_perturbations(
    manifest: &Manifest,
    preds: &[RankedPrediction],
    baseline: &BaselineProfile,
    opts: &EvalOptions,
    report: &mut RobustnessReport,
    diag: &mut Diagnostics,
) -> Result<()> {
    let by_key: HashMap<(&str, usize), &RankedPrediction> =
        preds.iter().map(|p| ((p.id.as_str(), p.frame), p)).collect();
    // kind -> sequences -> frames -> ranked list
    let mut per_kind: BTreeMap<PerturbationKind, (Mode, Vec<Vec<Vec<ClassId>>>)> = BTreeMap::new();
    for r in &manifest.records {
        let ItemSpec::Perturbation(spec) = &r.spec else {
            return Err(HarnessError::Format(format!("record {} in a perturbation manifest is not a sequence", r.id)));
        };
        let lists: Vec<Vec<ClassId>> =
            (0..spec.n_frames).map(|f| by_key[&(r.id.as_str(), f)].topk.clone()).collect();
        per_kind
            .entry(spec.kind)
            .or_insert_with(|| (r.mode.unwrap_or(spec.kind.mode()), Vec::new()))
            .1
            .push(lists);
    }
    let mut measures = BTreeMap::new();
    for (kind, (mode, seqs)) in per_kind {
        let stride = if mode == Mode::Noise { 1 } else { opts.stride };
        let top1: Vec<Vec<ClassId>> = seqs.iter().map(|s| s.iter().map(|l| l[0]).collect()).collect();
        let fp = pooled_flip_probability(&top1, mode, stride)?;
        let short = seqs.iter().flatten().any(|l| l.len() < MIN_TOPK);
        let ut5d = if short {
            diag.warn(format!("{kind}: ranked lists shorter than {MIN_TOPK}; top-5 distance not reported"));
            None
        } else {
            Some(pooled_ut5d(&seqs, mode, stride)?)
        };
        measures.insert(kind, PerturbationMeasure { fp, ut5d });
    }
    report.add_perturbations(&measures, baseline)?;
    Ok(())
}
