//! Metric implementations against literal re-implementations of the
//! published formulas and against published table values.

use std::collections::{BTreeMap, HashMap};

use corruptbench_core::corruptions::CorruptionKind;
use corruptbench_core::metrics::*;
use corruptbench_core::perturbations::{Mode, PerturbationKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The double sum over `σ = τ_a⁻¹ τ_b`, with τ mapping class → rank (1-based)
/// and σ(i) the rank under `b` of `a`'s class at rank `i`.
fn d_literal(a: &[ClassId], b: &[ClassId]) -> u32 {
    let rank_b: HashMap<ClassId, usize> = b.iter().enumerate().map(|(r, &c)| (c, r + 1)).collect();
    let mut d = 0;
    for i in 1..=5usize {
        let sigma_i = rank_b[&a[i - 1]];
        for j in i.min(sigma_i) + 1..=i.max(sigma_i) {
            if (1..=5).contains(&(j - 1)) {
                d += 1;
            }
        }
    }
    d
}

/// Permutation written as ranks: position i holds σ(i).
fn from_sigma(sigma: &[usize]) -> (Vec<ClassId>, Vec<ClassId>) {
    let n = sigma.len();
    let a: Vec<ClassId> = (0..n as ClassId).collect();
    let mut b = vec![0; n];
    for (i, &s) in sigma.iter().enumerate() {
        b[s - 1] = a[i];
    }
    (a, b)
}

fn ext(prefix: &[usize], n: usize) -> Vec<usize> {
    let mut v = prefix.to_vec();
    v.extend(prefix.len() + 1..=n);
    v
}

#[test]
fn worked_permutation_examples() {
    let cases: [(Vec<usize>, u32); 8] = [
        (ext(&[], 10), 0),
        (ext(&[1, 2, 3, 4, 6, 5], 10), 1),
        (ext(&[1, 2, 3, 4, 6, 7, 5], 10), 1),
        (ext(&[2, 1], 10), 2),
        (ext(&[3, 1, 2], 10), 4),
        (vec![2, 3, 4, 5, 6, 7, 8, 9, 10, 1], 5),
        (ext(&[1, 2, 3, 5, 6, 4], 10), 2),
        (ext(&[5, 4, 3, 2, 1], 10), 12),
    ];
    for (sigma, want) in cases {
        let (a, b) = from_sigma(&sigma);
        assert_eq!(d_literal(&a, &b), want, "oracle on {sigma:?}");
        assert_eq!(top5_distance(&a, &b).unwrap(), want, "{sigma:?}");
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, f);
        items.swap(k, i);
    }
}

#[test]
fn exhaustive_maximum_over_s8() {
    let mut max = 0;
    let mut count = 0;
    permutations(&mut (1..=8).collect(), 0, &mut |sigma| {
        let (a, b) = from_sigma(sigma);
        let d = top5_distance(&a, &b).unwrap();
        assert_eq!(d, d_literal(&a, &b));
        max = max.max(d);
        count += 1;
    });
    assert_eq!(count, 40320);
    assert_eq!(max, 18);
    // Three classes drop out while the other two climb: 5 + 4 + 3 + 3 + 3.
    let (a, b) = from_sigma(&[6, 7, 8, 1, 2, 3, 4, 5]);
    assert_eq!(top5_distance(&a, &b).unwrap(), 18);
}

#[test]
fn rank_cap_and_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..2000 {
        let mut a: Vec<ClassId> = (0..20).collect();
        let mut b = a.clone();
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let d = top5_distance(&a, &b).unwrap();
        assert_eq!(d, d_literal(&a, &b));
        let mut b2 = b.clone();
        b2[6..].shuffle(&mut rng);
        b2.swap(5, rng.random_range(5..20));
        assert_eq!(top5_distance(&a, &b2).unwrap(), d);
        assert_eq!(top5_distance(&a[..6], &b[..6]).unwrap(), d);
    }
}

fn flips_literal(seq: &[ClassId], mode: Mode, stride: usize) -> (usize, usize) {
    let n = seq.len();
    let mut flips = 0;
    let mut pairs = 0;
    // 1-based j as written; frame x_j is seq[j − 1].
    for j in (1 + stride)..=n {
        let anchor = match mode {
            Mode::Temporal => j - stride,
            Mode::Noise => 1,
        };
        pairs += 1;
        if seq[j - 1] != seq[anchor - 1] {
            flips += 1;
        }
    }
    (flips, pairs)
}

#[test]
fn flip_probability_matches_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..300 {
        let mode = if trial % 2 == 0 { Mode::Temporal } else { Mode::Noise };
        let stride = if mode == Mode::Temporal { 1 + trial % 3 / 2 } else { 1 };
        let m = rng.random_range(1..5);
        let n = rng.random_range(5..40);
        let seqs: Vec<Vec<ClassId>> =
            (0..m).map(|_| (0..n).map(|_| rng.random_range(0..3)).collect()).collect();
        let (f, p) = seqs.iter().map(|s| flips_literal(s, mode, stride)).fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        assert_eq!(pooled_flip_probability(&seqs, mode, stride).unwrap(), f as f64 / p as f64);
    }
}

#[test]
fn flip_hand_examples() {
    assert_eq!(flip_probability(&[1, 1, 2, 2, 1], Mode::Temporal, 1).unwrap(), 0.5);
    assert_eq!(flip_probability(&[5, 5, 7, 5], Mode::Noise, 1).unwrap(), 1.0 / 3.0);
    assert_eq!(flip_probability(&[4; 9], Mode::Temporal, 2).unwrap(), 0.0);
    assert!(flip_probability(&[5, 5, 7, 5], Mode::Noise, 2).is_err());
}

#[test]
fn table_one_rows() {
    let rows: [(&str, [f64; 15], f64); 3] = [
        ("ResNet-50", [80., 82., 83., 75., 89., 78., 80., 78., 75., 66., 57., 71., 85., 77., 77.], 76.7),
        ("VGG-19", [89., 91., 95., 89., 98., 90., 90., 89., 86., 75., 68., 80., 97., 102., 94.], 88.9),
        ("AlexNet", [100.; 15], 100.0),
    ];
    for (name, ce, want) in rows {
        let per_kind: BTreeMap<_, _> = CorruptionKind::BENCHMARK.iter().zip(ce).map(|(&k, v)| (k, v)).collect();
        let got = mce(&per_kind).unwrap();
        assert!((got - want).abs() <= 0.3, "{name}: {got}");
    }
}

#[test]
fn relative_mce_row() {
    // ResNet-50, relative CE row.
    let ce = [104., 107., 107., 97., 126., 107., 110., 101., 97., 79., 62., 89., 146., 111., 132.];
    let per_kind: BTreeMap<_, _> = CorruptionKind::BENCHMARK.iter().zip(ce).map(|(&k, v)| (k, v)).collect();
    assert!((mce(&per_kind).unwrap() - 105.0).abs() <= 0.3);
}

#[test]
fn flip_rate_row() {
    // ResNet-50 flip rates in table column order.
    let order = [
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
    let fr = [59., 58., 64., 72., 63., 62., 44., 52., 57., 48.];
    let per_kind: BTreeMap<_, _> = order.iter().zip(fr).map(|(&k, v)| (k, v)).collect();
    assert!((mfr(&per_kind).unwrap() - 58.0).abs() <= 0.3);
    let t5 = [82., 79., 84., 89., 80., 84., 64., 73., 80., 67.];
    let per_kind: BTreeMap<_, _> = order.iter().zip(t5).map(|(&k, v)| (k, v)).collect();
    assert!((mt5d(&per_kind).unwrap() - 78.3).abs() <= 0.3);
}

#[test]
fn published_scale_constants() {
    let b = BaselineProfile::alexnet();
    let fr = flip_rate(0.156, &b, PerturbationKind::Scale).unwrap();
    assert!((fr - 0.663).abs() < 0.005, "{fr}");
    let t = t5d(3.6, &b, PerturbationKind::Scale).unwrap();
    assert!((t - 0.804).abs() < 0.005, "{t}");
}

#[test]
fn ce_inversion_from_published_values() {
    // A CE of 0.80 against a baseline mean of 0.886 means a raw mean error of 0.709.
    let b = BaselineProfile::alexnet();
    let mut t = ErrorTable::new();
    for s in 1..=5 {
        t.set(CorruptionKind::GaussianNoise, s, 0.80 * 0.886).unwrap();
    }
    let ce = corruption_error(&t, &b, CorruptionKind::GaussianNoise).unwrap();
    assert!((ce - 0.80).abs() < 1e-12);
    assert!((0.80_f64 * 0.886 - 0.709).abs() < 5e-4);
}

#[test]
fn halving_flip_probabilities_halves_mfr() {
    let b = BaselineProfile::alexnet();
    let full: BTreeMap<_, _> = PerturbationKind::BENCHMARK
        .iter()
        .map(|&k| (k, flip_rate(b.fp_denoms[&k] * 0.8, &b, k).unwrap()))
        .collect();
    let half: BTreeMap<_, _> = PerturbationKind::BENCHMARK
        .iter()
        .map(|&k| (k, flip_rate(b.fp_denoms[&k] * 0.4, &b, k).unwrap()))
        .collect();
    assert!((mfr(&half).unwrap() * 2.0 - mfr(&full).unwrap()).abs() < 1e-12);
}

fn zipf_literal(a: &[ClassId], b: &[ClassId]) -> f64 {
    // Σ_i w_i |w_i − w_σ(i)|, σ(i) the rank under b of a's i-th class.
    let mut total = 0.0;
    for (i, c) in a.iter().enumerate() {
        let s = b.iter().position(|x| x == c).unwrap() + 1;
        let wi = 1.0 / (i + 1) as f64;
        total += wi * (wi - 1.0 / s as f64).abs();
    }
    total
}

#[test]
fn zipf_matches_brute_force_and_ignores_labels_of_common_suffix() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    assert_eq!(zipfian_distance(&[0, 1], &[1, 0]).unwrap(), 0.75);
    for _ in 0..500 {
        let n = rng.random_range(2..12);
        let mut a: Vec<ClassId> = (0..n).collect();
        a.shuffle(&mut rng);
        let mut b = a.clone();
        let k = rng.random_range(0..n as usize);
        b[..k].shuffle(&mut rng);
        let d = zipfian_distance(&a, &b).unwrap();
        assert!((d - zipf_literal(&a, &b)).abs() < 1e-12);
        // Relabel the classes of the shared tail.
        let mut relabel: HashMap<ClassId, ClassId> = HashMap::new();
        for (j, &c) in a[k..].iter().enumerate() {
            relabel.insert(c, 1000 + j as ClassId);
        }
        let map = |l: &[ClassId]| l.iter().map(|c| *relabel.get(c).unwrap_or(c)).collect::<Vec<_>>();
        assert!((zipfian_distance(&map(&a), &map(&b)).unwrap() - d).abs() < 1e-12);
    }
    assert!(zipfian_distance(&[0, 1], &[0, 2]).is_err());
}

#[test]
fn error_table_ignores_input_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut preds = Vec::new();
    let mut labels = HashMap::new();
    let mut groups = HashMap::new();
    for i in 0..60 {
        let id = format!("item{i}");
        let kind = CorruptionKind::BENCHMARK[i % 3];
        let sev = (i % 5) as u8 + 1;
        groups.insert(id.clone(), Group::Corrupted(kind, sev));
        labels.insert(id.clone(), (i % 4) as ClassId);
        let top = rng.random_range(0..4);
        preds.push(RankedPrediction { id, frame: 0, topk: vec![top, 10, 11, 12, 13, 14], model: None });
    }
    let t = error_table(&preds, &labels, &groups).unwrap();
    preds.shuffle(&mut rng);
    assert_eq!(error_table(&preds, &labels, &groups).unwrap(), t);
    let perfect: Vec<_> = preds
        .iter()
        .map(|p| RankedPrediction { topk: vec![labels[&p.id], 10, 11, 12, 13, 14], ..p.clone() })
        .collect();
    let t = error_table(&perfect, &labels, &groups).unwrap();
    assert!(t.kinds().iter().all(|&k| t.severities(k).unwrap() == [0.0; 5]));
}
