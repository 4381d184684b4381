//! Robustness scores.
//!
//! Corruption scores start from an [`ErrorTable`] of top-1 error rates per
//! (kind, severity) and are normalized by a [`BaselineProfile`]. Perturbation
//! scores start from per-frame ranked predictions: the flip probability
//! counts top-1 changes between paired frames, and the top-5 distance
//! measures how far the top five classes moved.
//!
//! All ratios are plain fractions (1.0 means "as bad as the baseline");
//! reports multiply by 100 only when rendering.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corruptions::CorruptionKind;
use crate::error::{Error, Result};
use crate::perturbations::{frame_pairs, Mode, PerturbationKind};

pub type ClassId = u64;

/// Ranks at or beyond this position all count the same in the top-5 distance.
pub const RANK_CAP: usize = 6;

/// Minimum list length for which the top-5 distance is fully determined.
pub const MIN_TOPK: usize = RANK_CAP;

// ---------------------------------------------------------------------------
// Predictions

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub id: String,
    #[serde(default)]
    pub frame: usize,
    /// Class ids, best first.
    pub topk: Vec<ClassId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl RankedPrediction {
    pub fn top1(&self) -> Option<ClassId> {
        self.topk.first().copied()
    }

    pub fn validate(&self) -> Result<()> {
        check_distinct(&self.topk).map_err(|c| {
            Error::Validation(format!("prediction {}#{} lists class {c} twice", self.id, self.frame))
        })
    }
}

fn check_distinct(list: &[ClassId]) -> std::result::Result<(), ClassId> {
    let mut seen = HashSet::with_capacity(list.len());
    for &c in list {
        if !seen.insert(c) {
            return Err(c);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Error tables

/// What an evaluated item is: a clean image or a corrupted one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Clean,
    Corrupted(CorruptionKind, u8),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    entries: BTreeMap<CorruptionKind, [Option<f64>; 5]>,
    clean_error: Option<f64>,
}

fn check_rate(what: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} must be an error rate in [0, 1], got {v}")))
    }
}

impl ErrorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, kind: CorruptionKind, severity: u8, error: f64) -> Result<()> {
        if !(1..=5).contains(&severity) {
            return Err(Error::Parameter(format!("severity must be in 1..=5, got {severity}")));
        }
        check_rate(&format!("{kind} s{severity} error"), error)?;
        self.entries.entry(kind).or_default()[usize::from(severity - 1)] = Some(error);
        Ok(())
    }

    pub fn set_clean_error(&mut self, error: f64) -> Result<()> {
        check_rate("clean error", error)?;
        self.clean_error = Some(error);
        Ok(())
    }

    pub fn clean_error(&self) -> Option<f64> {
        self.clean_error
    }

    pub fn get(&self, kind: CorruptionKind, severity: u8) -> Option<f64> {
        let i = usize::from(severity.checked_sub(1)?);
        self.entries.get(&kind)?.get(i).copied().flatten()
    }

    /// All five severities of `kind`, if every one is present.
    pub fn severities(&self, kind: CorruptionKind) -> Option<[f64; 5]> {
        let row = self.entries.get(&kind)?;
        let mut out = [0.0; 5];
        for (o, v) in out.iter_mut().zip(row) {
            *o = (*v)?;
        }
        Some(out)
    }

    /// Kinds with at least one entry, in canonical order.
    pub fn kinds(&self) -> Vec<CorruptionKind> {
        self.entries.keys().copied().collect()
    }

    /// Kinds with all five severities present.
    pub fn complete_kinds(&self) -> Vec<CorruptionKind> {
        self.entries.keys().copied().filter(|&k| self.severities(k).is_some()).collect()
    }
}

/// Top-1 error per group.
///
/// `groups` and `labels` are keyed by item id. Every item in `groups` needs a
/// prediction (frame 0) and a label; the error lists the offending ids.
pub fn error_table(
    predictions: &[RankedPrediction],
    labels: &HashMap<String, ClassId>,
    groups: &HashMap<String, Group>,
) -> Result<ErrorTable> {
    let by_id: HashMap<&str, &RankedPrediction> =
        predictions.iter().filter(|p| p.frame == 0).map(|p| (p.id.as_str(), p)).collect();
    let mut missing_pred: Vec<&str> = Vec::new();
    let mut missing_label: Vec<&str> = Vec::new();
    let mut counts: BTreeMap<Group, (u64, u64)> = BTreeMap::new();
    for (id, group) in groups {
        let Some(pred) = by_id.get(id.as_str()) else {
            missing_pred.push(id);
            continue;
        };
        let Some(label) = labels.get(id) else {
            missing_label.push(id);
            continue;
        };
        let c = counts.entry(*group).or_default();
        c.1 += 1;
        if pred.top1() != Some(*label) {
            c.0 += 1;
        }
    }
    if !missing_pred.is_empty() || !missing_label.is_empty() {
        missing_pred.sort_unstable();
        missing_label.sort_unstable();
        let mut msg = String::new();
        if !missing_pred.is_empty() {
            msg += &format!("no prediction for {} item(s): {}", missing_pred.len(), preview(&missing_pred));
        }
        if !missing_label.is_empty() {
            if !msg.is_empty() {
                msg += "; ";
            }
            msg += &format!("no label for {} item(s): {}", missing_label.len(), preview(&missing_label));
        }
        return Err(Error::Validation(msg));
    }
    let mut table = ErrorTable::new();
    for (group, (wrong, total)) in counts {
        let rate = wrong as f64 / total as f64;
        match group {
            Group::Clean => table.set_clean_error(rate)?,
            Group::Corrupted(kind, severity) => table.set(kind, severity, rate)?,
        }
    }
    Ok(table)
}

fn preview(ids: &[&str]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids.iter().take(SHOWN).copied().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        s += &format!(", ... ({} more)", ids.len() - SHOWN);
    }
    s
}

// ---------------------------------------------------------------------------
// Baseline profiles

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineProfile {
    pub name: String,
    pub clean_error: f64,
    /// Mean error over the five severities.
    pub corruption_denoms: BTreeMap<CorruptionKind, f64>,
    pub fp_denoms: BTreeMap<PerturbationKind, f64>,
    pub ut5d_denoms: BTreeMap<PerturbationKind, f64>,
}

const BUILTIN_PROFILES: [(&str, &str); 2] = [
    ("alexnet-paper", include_str!("../data/baselines/alexnet-paper.toml")),
    ("unit", include_str!("../data/baselines/unit.toml")),
];

impl BaselineProfile {
    pub fn builtin_names() -> Vec<&'static str> {
        BUILTIN_PROFILES.iter().map(|(n, _)| *n).collect()
    }

    pub fn builtin(name: &str) -> Option<BaselineProfile> {
        BUILTIN_PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text).expect("bundled profile is valid"))
    }

    pub fn alexnet() -> BaselineProfile {
        Self::builtin("alexnet-paper").expect("bundled")
    }

    pub fn unit() -> BaselineProfile {
        Self::builtin("unit").expect("bundled")
    }

    /// A built-in name, or else a path to a profile file.
    pub fn resolve(name_or_path: &str) -> Result<BaselineProfile> {
        match Self::builtin(name_or_path) {
            Some(p) => Ok(p),
            None if Path::new(name_or_path).exists() => Self::load(name_or_path),
            None => Err(Error::Parameter(format!(
                "unknown baseline profile `{name_or_path}` (built-in: {})",
                Self::builtin_names().join(", ")
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: BaselineProfile = toml::from_str(text).map_err(|e| Error::Format(format!("baseline profile: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: String, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("baseline {what} must be positive, got {v}")))
            }
        };
        for (k, &v) in &self.corruption_denoms {
            positive(format!("corruption denominator for {k}"), v)?;
        }
        for (k, &v) in &self.fp_denoms {
            positive(format!("flip-probability denominator for {k}"), v)?;
        }
        for (k, &v) in &self.ut5d_denoms {
            positive(format!("top-5 distance denominator for {k}"), v)?;
        }
        check_rate("baseline clean error", self.clean_error)
    }

    fn corruption_denom(&self, kind: CorruptionKind) -> Result<f64> {
        self.corruption_denoms
            .get(&kind)
            .copied()
            .ok_or_else(|| Error::UndefinedMeasure(format!("baseline `{}` has no denominator for {kind}", self.name)))
    }

    fn perturbation_denom(&self, map: &BTreeMap<PerturbationKind, f64>, what: &str, kind: PerturbationKind) -> Result<f64> {
        let d = map
            .get(&kind)
            .copied()
            .ok_or_else(|| Error::UndefinedMeasure(format!("baseline `{}` has no {what} denominator for {kind}", self.name)))?;
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::UndefinedMeasure(format!("baseline `{}` {what} denominator for {kind} is zero", self.name)))
        }
    }

    /// The error table this profile describes: every severity at the stored
    /// mean, plus the clean error.
    pub fn error_table(&self) -> ErrorTable {
        let mut t = ErrorTable::new();
        for (&k, &m) in &self.corruption_denoms {
            for s in 1..=5 {
                t.set(k, s, m.min(1.0)).expect("validated rate");
            }
        }
        t.set_clean_error(self.clean_error).expect("validated rate");
        t
    }
}

// ---------------------------------------------------------------------------
// Corruption scores

fn complete_row(table: &ErrorTable, kind: CorruptionKind) -> Result<[f64; 5]> {
    table
        .severities(kind)
        .ok_or_else(|| Error::Validation(format!("error table lacks some severities of {kind}")))
}

/// `Σ_s E_s / Σ_s E^base_s`, the baseline sum being five times its mean.
pub fn corruption_error(table: &ErrorTable, baseline: &BaselineProfile, kind: CorruptionKind) -> Result<f64> {
    let row = complete_row(table, kind)?;
    let denom = 5.0 * baseline.corruption_denom(kind)?;
    if denom <= 0.0 {
        return Err(Error::UndefinedMeasure(format!("baseline error for {kind} is zero")));
    }
    Ok(row.iter().sum::<f64>() / denom)
}

/// `Σ_s (E_s − E_clean) / Σ_s (E^base_s − E^base_clean)`.
pub fn relative_corruption_error(table: &ErrorTable, baseline: &BaselineProfile, kind: CorruptionKind) -> Result<f64> {
    let row = complete_row(table, kind)?;
    let clean = table
        .clean_error()
        .ok_or_else(|| Error::Validation("relative CE needs the clean error E_clean (predictions on clean images)".into()))?;
    let denom = 5.0 * (baseline.corruption_denom(kind)? - baseline.clean_error);
    if denom <= 0.0 {
        return Err(Error::UndefinedMeasure(format!(
            "baseline `{}` is no worse on {kind} than on clean images; relative CE is undefined",
            baseline.name
        )));
    }
    Ok(row.iter().map(|e| e - clean).sum::<f64>() / denom)
}

/// Mean over the fifteen benchmark kinds; validation kinds are ignored.
pub fn mce(per_kind: &BTreeMap<CorruptionKind, f64>) -> Result<f64> {
    let missing: Vec<&str> =
        CorruptionKind::BENCHMARK.iter().filter(|k| !per_kind.contains_key(k)).map(|k| k.name()).collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("mean CE needs all 15 benchmark kinds; missing {}", missing.join(", "))));
    }
    Ok(CorruptionKind::BENCHMARK.iter().map(|k| per_kind[k]).sum::<f64>() / 15.0)
}

// ---------------------------------------------------------------------------
// Perturbation scores

fn pairs_for(n: usize, mode: Mode, stride: usize) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::Parameter(format!("a sequence needs at least 2 frames, got {n}")));
    }
    let pairs = frame_pairs(mode, n, stride)?;
    if pairs.is_empty() {
        return Err(Error::Parameter(format!("a {n}-frame sequence has no stride-{stride} pairs")));
    }
    Ok(pairs)
}

/// Number of flipped pairs and number of pairs in one sequence.
pub fn flip_counts(top1: &[ClassId], mode: Mode, stride: usize) -> Result<(usize, usize)> {
    let pairs = pairs_for(top1.len(), mode, stride)?;
    let flips = pairs.iter().filter(|&&(a, b)| top1[a] != top1[b]).count();
    Ok((flips, pairs.len()))
}

/// Fraction of frame pairs whose top-1 class differs.
pub fn flip_probability(top1: &[ClassId], mode: Mode, stride: usize) -> Result<f64> {
    let (flips, pairs) = flip_counts(top1, mode, stride)?;
    Ok(flips as f64 / pairs as f64)
}

/// Flip probability pooled over many sequences of one perturbation.
pub fn pooled_flip_probability<S: AsRef<[ClassId]>>(sequences: &[S], mode: Mode, stride: usize) -> Result<f64> {
    let (mut flips, mut pairs) = (0usize, 0usize);
    for seq in sequences {
        let (f, p) = flip_counts(seq.as_ref(), mode, stride)?;
        flips += f;
        pairs += p;
    }
    if pairs == 0 {
        return Err(Error::Parameter("no sequences to score".into()));
    }
    Ok(flips as f64 / pairs as f64)
}

pub fn flip_rate(fp: f64, baseline: &BaselineProfile, kind: PerturbationKind) -> Result<f64> {
    Ok(fp / baseline.perturbation_denom(&baseline.fp_denoms, "flip-probability", kind)?)
}

fn mean_over_benchmark(per_kind: &BTreeMap<PerturbationKind, f64>, what: &str) -> Result<f64> {
    let missing: Vec<&str> =
        PerturbationKind::BENCHMARK.iter().filter(|k| !per_kind.contains_key(k)).map(|k| k.name()).collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("{what} needs all 10 benchmark perturbations; missing {}", missing.join(", "))));
    }
    Ok(PerturbationKind::BENCHMARK.iter().map(|k| per_kind[k]).sum::<f64>() / 10.0)
}

/// Mean flip rate over the ten benchmark perturbations.
pub fn mfr(per_kind: &BTreeMap<PerturbationKind, f64>) -> Result<f64> {
    mean_over_benchmark(per_kind, "mean flip rate")
}

/// Top-5 distance between two ranked lists.
///
/// For each of the first five classes of `a`, the displacement to its rank
/// in `b` is counted, with ranks past the fifth all treated as the sixth
/// (classes missing from `b` included). Disjoint top-5 sets score 15; the
/// maximum, 18, needs classes to move both out of and up within the top five.
///
/// The measure looks at `a`'s top five only, so it is not symmetric in
/// general: swapping the arguments can change the value when the top-5 sets
/// differ.
pub fn top5_distance(a: &[ClassId], b: &[ClassId]) -> Result<u32> {
    for list in [a, b] {
        check_distinct(list).map_err(|c| Error::Validation(format!("ranked list repeats class {c}")))?;
    }
    let mut d = 0;
    for (i, class) in a.iter().take(5).enumerate() {
        let rank = i + 1;
        let other = b.iter().take(5).position(|c| c == class).map_or(RANK_CAP, |p| p + 1);
        d += rank.abs_diff(other) as u32;
    }
    // Positions of `a` beyond its list length behave as absent classes: a
    // shorter list's missing slots are filled by classes outside `b`'s top five.
    for rank in a.len().min(5) + 1..=5 {
        d += (RANK_CAP - rank) as u32;
    }
    Ok(d)
}

/// Sum of top-5 distances and number of pairs in one sequence. Pairs compare
/// the later frame's list against the earlier (or clean) frame's.
pub fn top5_counts<L: AsRef<[ClassId]>>(lists: &[L], mode: Mode, stride: usize) -> Result<(u64, usize)> {
    let pairs = pairs_for(lists.len(), mode, stride)?;
    let mut total = 0u64;
    for &(earlier, later) in &pairs {
        total += u64::from(top5_distance(lists[later].as_ref(), lists[earlier].as_ref())?);
    }
    Ok((total, pairs.len()))
}

/// Unstandardized top-5 distance: the mean distance over the frame pairs.
pub fn ut5d<L: AsRef<[ClassId]>>(lists: &[L], mode: Mode, stride: usize) -> Result<f64> {
    let (total, pairs) = top5_counts(lists, mode, stride)?;
    Ok(total as f64 / pairs as f64)
}

/// uT5D pooled over many sequences of one perturbation.
pub fn pooled_ut5d<L: AsRef<[ClassId]>>(sequences: &[Vec<L>], mode: Mode, stride: usize) -> Result<f64> {
    let (mut total, mut pairs) = (0u64, 0usize);
    for seq in sequences {
        let (t, p) = top5_counts(seq, mode, stride)?;
        total += t;
        pairs += p;
    }
    if pairs == 0 {
        return Err(Error::Parameter("no sequences to score".into()));
    }
    Ok(total as f64 / pairs as f64)
}

pub fn t5d(ut5d: f64, baseline: &BaselineProfile, kind: PerturbationKind) -> Result<f64> {
    Ok(ut5d / baseline.perturbation_denom(&baseline.ut5d_denoms, "top-5 distance", kind)?)
}

/// Mean T5D over the ten benchmark perturbations.
pub fn mt5d(per_kind: &BTreeMap<PerturbationKind, f64>) -> Result<f64> {
    mean_over_benchmark(per_kind, "mean top-5 distance")
}

/// Zipf-weighted displacement over complete rankings of the same classes:
/// `Σ_i w_i·|w_i − w_σ(i)|` with `w_i = 1/i`.
pub fn zipfian_distance(a: &[ClassId], b: &[ClassId]) -> Result<f64> {
    for list in [a, b] {
        check_distinct(list).map_err(|c| Error::Validation(format!("ranked list repeats class {c}")))?;
    }
    let pos: HashMap<ClassId, usize> = b.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
    if a.len() != b.len() || a.iter().any(|c| !pos.contains_key(c)) {
        return Err(Error::Validation("Zipfian distance needs both lists to rank the same classes".into()));
    }
    Ok(a
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let wi = 1.0 / (i + 1) as f64;
            let ws = 1.0 / pos[c] as f64;
            wi * (wi - ws).abs()
        })
        .sum())
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionScore {
    pub kind: CorruptionKind,
    pub benchmark: bool,
    pub errors: [f64; 5],
    pub ce: f64,
    pub relative_ce: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationScore {
    pub kind: PerturbationKind,
    pub benchmark: bool,
    pub fp: f64,
    pub fr: f64,
    pub ut5d: Option<f64>,
    pub t5d: Option<f64>,
}

/// Raw perturbation measurements for one kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationMeasure {
    pub fp: f64,
    pub ut5d: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub baseline: String,
    pub baseline_hash: String,
    pub manifest_hash: Option<String>,
    pub difficulty: Option<String>,
    pub stride: Option<u8>,
    pub clean_error: Option<f64>,
    pub corruptions: Vec<CorruptionScore>,
    pub perturbations: Vec<PerturbationScore>,
    pub mce: Option<f64>,
    pub relative_mce: Option<f64>,
    pub mfr: Option<f64>,
    pub mt5d: Option<f64>,
}

impl RobustnessReport {
    pub fn new(baseline: &BaselineProfile) -> Self {
        Self { baseline: baseline.name.clone(), baseline_hash: baseline.hash(), ..Self::default() }
    }

    /// Scores every complete kind in `table`. Aggregates are filled in when all
    /// fifteen benchmark kinds are present; relative scores need the clean error.
    pub fn add_corruptions(&mut self, table: &ErrorTable, baseline: &BaselineProfile) -> Result<()> {
        self.clean_error = table.clean_error();
        self.corruptions.clear();
        for kind in table.complete_kinds() {
            let relative_ce = match table.clean_error() {
                Some(_) => Some(relative_corruption_error(table, baseline, kind)?),
                None => None,
            };
            self.corruptions.push(CorruptionScore {
                kind,
                benchmark: kind.is_benchmark(),
                errors: complete_row(table, kind)?,
                ce: corruption_error(table, baseline, kind)?,
                relative_ce,
            });
        }
        let ce: BTreeMap<_, _> = self.corruptions.iter().map(|s| (s.kind, s.ce)).collect();
        self.mce = mce(&ce).ok();
        self.relative_mce = if self.clean_error.is_some() {
            let rel: BTreeMap<_, _> =
                self.corruptions.iter().filter_map(|s| s.relative_ce.map(|r| (s.kind, r))).collect();
            mce(&rel).ok()
        } else {
            None
        };
        Ok(())
    }

    pub fn add_perturbations(
        &mut self,
        measures: &BTreeMap<PerturbationKind, PerturbationMeasure>,
        baseline: &BaselineProfile,
    ) -> Result<()> {
        self.perturbations.clear();
        for (&kind, m) in measures {
            let t5d = match m.ut5d {
                Some(u) => Some(t5d(u, baseline, kind)?),
                None => None,
            };
            self.perturbations.push(PerturbationScore {
                kind,
                benchmark: kind.is_benchmark(),
                fp: m.fp,
                fr: flip_rate(m.fp, baseline, kind)?,
                ut5d: m.ut5d,
                t5d,
            });
        }
        let fr: BTreeMap<_, _> = self.perturbations.iter().map(|s| (s.kind, s.fr)).collect();
        self.mfr = mfr(&fr).ok();
        let t: BTreeMap<_, _> = self.perturbations.iter().filter_map(|s| s.t5d.map(|v| (s.kind, v))).collect();
        self.mt5d = mt5d(&t).ok();
        Ok(())
    }

    /// The report a model identical to `baseline` would get.
    pub fn baseline_self_report(baseline: &BaselineProfile) -> Result<Self> {
        let mut r = Self::new(baseline);
        r.add_corruptions(&baseline.error_table(), baseline)?;
        let measures = baseline
            .fp_denoms
            .iter()
            .map(|(&k, &fp)| (k, PerturbationMeasure { fp, ut5d: baseline.ut5d_denoms.get(&k).copied() }))
            .collect();
        r.add_perturbations(&measures, baseline)?;
        Ok(r)
    }
}
