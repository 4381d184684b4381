//! Generation, validation, evaluation and rendering through the library API.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use corruptbench_core::corpus::synthetic_image_sized;
use corruptbench_core::corruptions::CorruptionKind;
use corruptbench_core::imaging::io::{encode_image, load_image, save_image, ImageFormat};
use corruptbench_core::metrics::{BaselineProfile, RankedPrediction};
use corruptbench_core::perturbations::{Difficulty, Mode, PerturbationKind};
use corruptbench_harness::classify::{predict, Model};
use corruptbench_harness::evaluate::{evaluate, EvalOptions};
use corruptbench_harness::generate::{
    generate_corruptions, generate_perturbations, CorruptionOptions, GenOptions, PerturbationOptions,
};
use corruptbench_harness::manifest::{ItemSpec, Layout, Manifest};
use corruptbench_harness::render;
use corruptbench_harness::validate::{parse_predictions, read_labels, read_predictions, validate_predictions};
use corruptbench_harness::HarnessError;
use tempfile::TempDir;
use walkdir::WalkDir;

const SIDE: usize = 40;

fn source_tree(names: &[&str]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (i, name) in names.iter().enumerate() {
        let path = dir.path().join(format!("{name}.png"));
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        save_image(&synthetic_image_sized(i, SIDE, SIDE), &path, ImageFormat::Png).unwrap();
    }
    dir
}

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("img{i:02}")).collect()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(root).unwrap().to_path_buf())
        .collect()
}

fn png() -> CorruptionOptions {
    CorruptionOptions { format: ImageFormat::Png, ..Default::default() }
}

fn opts(seed: u64) -> GenOptions {
    GenOptions { seed, ..Default::default() }
}

#[test]
fn full_corruption_set_has_one_file_per_item() {
    let names = numbered(10);
    let src = source_tree(&names.iter().map(String::as_str).collect::<Vec<_>>());
    let out = tempfile::tempdir().unwrap();
    let m = generate_corruptions(src.path(), out.path(), &opts(1), &CorruptionOptions::default()).unwrap();
    assert!(m.complete && m.benchmark_only);
    assert_eq!(m.records.len(), 750);
    let files = files_under(out.path());
    assert_eq!(files.len(), 751);
    assert!(files.contains(&PathBuf::from("manifest.json")));
    assert!(files.contains(&PathBuf::from("gaussian_noise/3/img07.jpg")));
    assert!(m.verify(out.path()).is_ok());
}

#[test]
fn kind_filter_limits_output() {
    let src = source_tree(&["x", "sub/y"]);
    let out = tempfile::tempdir().unwrap();
    let c = CorruptionOptions { kinds: vec![CorruptionKind::Fog], ..png() };
    generate_corruptions(src.path(), out.path(), &opts(1), &c).unwrap();
    for f in files_under(out.path()) {
        assert!(f.starts_with("fog") || f == Path::new("manifest.json"), "{}", f.display());
    }
    assert!(out.path().join("fog/5/sub/y.png").is_file());
}

#[test]
fn png_reruns_are_identical_regardless_of_workers() {
    let src = source_tree(&["a", "b", "c"]);
    let c = CorruptionOptions { kinds: CorruptionKind::ALL.to_vec(), severities: vec![2, 5], ..png() };
    let (o1, o2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = generate_corruptions(src.path(), o1.path(), &GenOptions { jobs: 1, ..opts(9) }, &c).unwrap();
    let m2 = generate_corruptions(src.path(), o2.path(), &GenOptions { jobs: 3, ..opts(9) }, &c).unwrap();
    assert_eq!(m1.content_hash(), m2.content_hash());
    let m3 = generate_corruptions(src.path(), o2.path(), &opts(10), &c).unwrap();
    assert_ne!(m1.content_hash(), m3.content_hash());
}

#[test]
fn item_seeds_differ_per_source() {
    let src = tempfile::tempdir().unwrap();
    let img = synthetic_image_sized(0, SIDE, SIDE);
    for i in 0..10 {
        save_image(&img, src.path().join(format!("copy{i}.png")), ImageFormat::Png).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let c = CorruptionOptions { kinds: vec![CorruptionKind::GaussianNoise], severities: vec![3], ..png() };
    let m = generate_corruptions(src.path(), out.path(), &opts(4), &c).unwrap();
    let hashes: HashSet<_> = m.records.iter().map(|r| r.outputs[0].sha256.clone()).collect();
    assert_eq!(hashes.len(), 10);
    let seeds: HashSet<_> = m
        .records
        .iter()
        .map(|r| match &r.spec {
            ItemSpec::Corruption(s) => s.seed,
            _ => unreachable!(),
        })
        .collect();
    assert_eq!(seeds.len(), 10);
}

#[test]
fn empty_source_and_bad_filters_fail() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let err = generate_corruptions(src.path(), out.path(), &opts(0), &png()).unwrap_err();
    assert!(matches!(err, HarnessError::Validation(_)), "{err}");
    let src = source_tree(&["a"]);
    let c = CorruptionOptions { severities: vec![6], ..png() };
    assert!(matches!(generate_corruptions(src.path(), out.path(), &opts(0), &c), Err(HarnessError::Parameter(_))));
}

#[test]
fn undecodable_source_marks_manifest_incomplete() {
    let src = source_tree(&["good"]);
    fs::write(src.path().join("broken.png"), b"not a png").unwrap();
    let out = tempfile::tempdir().unwrap();
    let c = CorruptionOptions { kinds: vec![CorruptionKind::Contrast], ..png() };
    let m = generate_corruptions(src.path(), out.path(), &opts(0), &c).unwrap();
    assert!(!m.complete);
    assert_eq!(m.errors.len(), 1);
    assert_eq!(m.errors[0].id, "broken");
    assert_eq!(m.records.len(), 5);
    let (reloaded, _) = Manifest::open(out.path()).unwrap();
    assert_eq!(reloaded, m);
    assert!(!m.verify(out.path()).is_ok());
}

fn perturbation_set(names: &[&str], p: &PerturbationOptions) -> (TempDir, TempDir, Manifest) {
    let src = source_tree(names);
    let out = tempfile::tempdir().unwrap();
    let m = generate_perturbations(src.path(), out.path(), &opts(5), p).unwrap();
    (src, out, m)
}

#[test]
fn perturbation_set_counts_and_clean_first_frame() {
    let (src, out, m) = perturbation_set(&["a", "b", "c", "d", "e"], &PerturbationOptions::default());
    assert_eq!(m.records.len(), 50);
    let frames = files_under(out.path()).into_iter().filter(|f| f.extension().is_some_and(|e| e == "png")).count();
    assert_eq!(frames, 1550);
    assert_eq!(m.n_frames, Some(31));
    let rec = m.record("gaussian_noise/c").unwrap();
    assert_eq!(rec.mode, Some(Mode::Noise));
    assert_eq!(rec.outputs[0].path, "gaussian_noise/c/frame_00.png");
    let reencoded = encode_image(&load_image(src.path().join("c.png")).unwrap(), ImageFormat::Png).unwrap();
    assert_eq!(fs::read(out.path().join(&rec.outputs[0].path)).unwrap(), reencoded);
    assert_eq!(m.record("translate/c").unwrap().mode, Some(Mode::Temporal));
}

fn perfect_labels(m: &Manifest) -> HashMap<String, u64> {
    m.sources.iter().enumerate().map(|(i, s)| (s.id.clone(), i as u64)).collect()
}

fn relabel(preds: &mut [RankedPrediction], m: &Manifest, labels: &HashMap<String, u64>) {
    for p in preds {
        let source = &m.record(&p.id).map(|r| r.source_id.clone()).unwrap_or_else(|| p.id.replace("clean/", ""));
        let label = labels[source];
        p.topk = std::iter::once(label).chain((100..105).filter(|&c| c != label)).collect();
    }
}

#[test]
fn hard_difficulty_is_echoed_and_constant_model_never_flips() {
    let p = PerturbationOptions { difficulty: Difficulty::Hard, ..Default::default() };
    let (_src, out, m) = perturbation_set(&["a", "b"], &p);
    assert_eq!(m.difficulty, Some(Difficulty::Hard));
    let preds = predict(&m, out.path(), Model::Constant, 10).unwrap();
    let (r, d) = evaluate(&m, &preds, None, &BaselineProfile::alexnet(), &EvalOptions::default()).unwrap();
    assert!(d.is_empty(), "{}", d.render());
    assert_eq!(r.difficulty.as_deref(), Some("hard"));
    assert!(render::to_text(&r).contains("difficulty  hard"));
    assert_eq!(r.mfr, Some(0.0));
    assert_eq!(r.mt5d, Some(0.0));
    assert!(r.perturbations.iter().all(|s| s.fp == 0.0 && s.ut5d == Some(0.0)));
}

#[test]
fn flipping_model_flips_every_temporal_pair() {
    let (_src, out, m) = perturbation_set(&["a", "b"], &PerturbationOptions::default());
    let preds = predict(&m, out.path(), Model::Flip, 10).unwrap();
    for stride in [1, 2] {
        let opts = EvalOptions { stride, ..Default::default() };
        let (r, _) = evaluate(&m, &preds, None, &BaselineProfile::alexnet(), &opts).unwrap();
        assert_eq!(r.stride, Some(stride as u8));
        for s in &r.perturbations {
            assert_eq!(s.fp, 1.0, "{}", s.kind);
        }
    }
}

#[test]
fn stack_layout_reads_back_the_same_frames() {
    let kinds = vec![PerturbationKind::Rotate, PerturbationKind::ShotNoise];
    let dir = PerturbationOptions { kinds: kinds.clone(), ..Default::default() };
    let stack = PerturbationOptions { kinds, layout: Layout::Stack, ..Default::default() };
    let (_s1, o1, m1) = perturbation_set(&["a", "b"], &dir);
    let (_s2, o2, m2) = perturbation_set(&["a", "b"], &stack);
    assert_eq!(m2.records[0].outputs.len(), 1);
    assert_eq!(predict(&m1, o1.path(), Model::Toy, 8).unwrap(), predict(&m2, o2.path(), Model::Toy, 8).unwrap());
}

#[test]
fn truncating_lists_to_six_keeps_top5_distance() {
    let (_src, out, m) = perturbation_set(&["a", "b", "c"], &PerturbationOptions::default());
    let preds = predict(&m, out.path(), Model::Toy, 10).unwrap();
    let short: Vec<_> =
        preds.iter().map(|p| RankedPrediction { topk: p.topk[..6].to_vec(), ..p.clone() }).collect();
    let b = BaselineProfile::alexnet();
    let (full, _) = evaluate(&m, &preds, None, &b, &EvalOptions::default()).unwrap();
    let (cut, _) = evaluate(&m, &short, None, &b, &EvalOptions::default()).unwrap();
    assert_eq!(full.perturbations, cut.perturbations);
    assert_eq!(full.mt5d, cut.mt5d);
}

#[test]
fn validation_diagnostics() {
    let p = PerturbationOptions { kinds: vec![PerturbationKind::Tilt], ..Default::default() };
    let (_src, out, m) = perturbation_set(&["a", "b"], &p);
    let preds = predict(&m, out.path(), Model::Toy, 10).unwrap();
    assert!(validate_predictions(&m, &preds).is_empty());

    let mut missing = preds.clone();
    missing.retain(|p| !(p.id == "tilt/b" && p.frame == 7));
    let d = validate_predictions(&m, &missing);
    assert_eq!(d.errors, ["missing prediction for tilt/b#7"]);

    let mut short = preds.clone();
    short[3].topk.truncate(5);
    let d = validate_predictions(&m, &short);
    assert!(d.is_ok());
    assert_eq!(d.warnings.len(), 1);
    assert!(d.warnings[0].contains("tilt/a#3"), "{:?}", d.warnings);

    let mut bad = preds.clone();
    bad.push(preds[0].clone());
    bad.push(RankedPrediction { id: "tilt/zzz".into(), ..preds[0].clone() });
    bad.push(RankedPrediction { frame: 31, ..preds[0].clone() });
    bad[1].topk[2] = bad[1].topk[0];
    let d = validate_predictions(&m, &bad);
    assert_eq!(d.errors.len(), 4, "{}", d.render());
}

#[test]
fn tampering_is_detected() {
    let src = source_tree(&["a", "b"]);
    let out = tempfile::tempdir().unwrap();
    let c = CorruptionOptions { kinds: vec![CorruptionKind::Jpeg], severities: vec![1], ..png() };
    let m = generate_corruptions(src.path(), out.path(), &opts(0), &c).unwrap();
    assert!(m.verify(out.path()).is_empty());
    let target = out.path().join("jpeg/1/b.png");
    let mut bytes = fs::read(&target).unwrap();
    let n = bytes.len();
    bytes[n - 20] ^= 1;
    fs::write(&target, bytes).unwrap();
    let d = m.verify(out.path());
    assert_eq!(d.errors.len(), 1);
    assert!(d.errors[0].contains("jpeg/1/b.png"));
    fs::remove_file(out.path().join("jpeg/1/a.png")).unwrap();
    assert_eq!(m.verify(out.path()).errors.len(), 2);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let text = "{\"id\":\"a\",\"frame\":0,\"topk\":[1,2,3,4,5,6]}\n\n{\"id\":\"b\",\"topk\":[1,2\n";
    match parse_predictions(text, Path::new("log.jsonl")) {
        Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let ok = parse_predictions("{\"id\":\"b\",\"topk\":[4,5,6,7,8,9]}\n", Path::new("x")).unwrap();
    assert_eq!(ok[0].frame, 0);
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fog4").join(name)
}

#[test]
fn hand_scored_fixture() {
    let src = source_tree(&["a", "b", "c", "d"]);
    let out = tempfile::tempdir().unwrap();
    let c = CorruptionOptions { kinds: vec![CorruptionKind::Fog], ..Default::default() };
    let m = generate_corruptions(src.path(), out.path(), &opts(0), &c).unwrap();
    let preds = read_predictions(&fixture("predictions.jsonl")).unwrap();
    let labels = read_labels(&fixture("labels.tsv")).unwrap();
    let opts = EvalOptions { require_relative: true, ..Default::default() };
    let (r, d) = evaluate(&m, &preds, Some(&labels), &BaselineProfile::alexnet(), &opts).unwrap();
    assert!(d.is_empty(), "{}", d.render());
    let fog = &r.corruptions[0];
    assert_eq!(fog.errors, [0.0, 0.25, 0.25, 0.5, 0.75]);
    assert_eq!(r.clean_error, Some(0.25));
    assert!((fog.ce - 1.75 / (5.0 * 0.819)).abs() < 1e-12);
    assert!((fog.relative_ce.unwrap() - 0.5 / 1.92).abs() < 1e-12);
    assert_eq!(r.mce, None, "one kind is not enough for mCE");

    let no_clean: Vec<_> = preds.iter().filter(|p| !p.id.starts_with("clean/")).cloned().collect();
    let err = evaluate(&m, &no_clean, Some(&labels), &BaselineProfile::alexnet(), &opts).unwrap_err();
    assert!(err.to_string().contains("E_clean"), "{err}");
    let (r, _) = evaluate(&m, &no_clean, Some(&labels), &BaselineProfile::alexnet(), &EvalOptions::default()).unwrap();
    assert_eq!(r.corruptions[0].relative_ce, None);
}

fn benchmark_set(with_clean: bool) -> (TempDir, TempDir, Manifest) {
    let src = source_tree(&["a", "b", "c"]);
    let out = tempfile::tempdir().unwrap();
    let c = CorruptionOptions { with_clean, ..png() };
    let m = generate_corruptions(src.path(), out.path(), &opts(2), &c).unwrap();
    (src, out, m)
}

#[test]
fn perfect_predictions_score_zero() {
    let (_src, out, m) = benchmark_set(true);
    let labels = perfect_labels(&m);
    let mut preds = predict(&m, out.path(), Model::Constant, 6).unwrap();
    relabel(&mut preds, &m, &labels);
    let (r, _) = evaluate(&m, &preds, Some(&labels), &BaselineProfile::alexnet(), &EvalOptions::default()).unwrap();
    assert_eq!(r.mce, Some(0.0));
    assert_eq!(r.clean_error, Some(0.0));
    assert_eq!(r.corruptions.len(), 15);
}

#[test]
fn report_round_trips_and_tables() {
    let (_src, out, m) = benchmark_set(true);
    let labels: HashMap<String, u64> = m.sources.iter().map(|s| (s.id.clone(), 3)).collect();
    let preds = predict(&m, out.path(), Model::Toy, 10).unwrap();
    let (r, _) = evaluate(&m, &preds, Some(&labels), &BaselineProfile::unit(), &EvalOptions::default()).unwrap();

    let json = render::to_json(&r);
    let back = render::from_csv(&render::to_csv(&render::from_json(&json).unwrap())).unwrap();
    assert_eq!(back, r);
    assert_eq!(render::to_json(&back), json);

    let t = render::corruption_table(&r);
    assert_eq!(t.header.len(), 17);
    assert_eq!(&t.header[..2], ["Error", "mCE"]);
    let groups: Vec<_> = t.groups.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    assert_eq!(groups, [("", 2), ("Noise", 3), ("Blur", 4), ("Weather", 4), ("Digital", 4)]);

    // Unit baseline: CE is the raw mean error, so mCE is their plain mean.
    let raw: Vec<f64> = r.corruptions.iter().map(|s| s.errors.iter().sum::<f64>() / 5.0).collect();
    let expected = raw.iter().sum::<f64>() / 15.0;
    assert!((r.mce.unwrap() - expected).abs() < 1e-12);
    assert!((t.rows[0].1[1].parse::<f64>().unwrap() - 100.0 * expected).abs() <= 0.05);

    let plots = tempfile::tempdir().unwrap();
    let written = render::write_plots(&r, plots.path()).unwrap();
    assert_eq!(written.len(), 2);
    assert!(fs::read_to_string(&written[0]).unwrap().starts_with("<svg"));
}

#[test]
fn end_to_end_reports_are_byte_identical() {
    let src = source_tree(&["a", "b"]);
    let out = tempfile::tempdir().unwrap();
    let run = || {
        let c = CorruptionOptions { kinds: vec![CorruptionKind::Snow, CorruptionKind::Pixelate], with_clean: true, ..png() };
        let m = generate_corruptions(src.path(), out.path(), &opts(77), &c).unwrap();
        let preds = predict(&m, out.path(), Model::Toy, 10).unwrap();
        let labels: HashMap<String, u64> = m.sources.iter().map(|s| (s.id.clone(), 1)).collect();
        let (r, _) = evaluate(&m, &preds, Some(&labels), &BaselineProfile::alexnet(), &EvalOptions::default()).unwrap();
        (render::to_json(&r), render::to_csv(&r), render::to_text(&r))
    };
    assert_eq!(run(), run());
}

#[test]
fn self_normalized_report_renders_hundreds() {
    let r = corruptbench_core::metrics::RobustnessReport::baseline_self_report(&BaselineProfile::alexnet()).unwrap();
    let text = render::to_text(&r);
    let ce_row = text.lines().find(|l| l.starts_with("CE ")).unwrap();
    let cells: Vec<&str> = ce_row.split_whitespace().skip(1).collect();
    assert_eq!(cells.len(), 17);
    assert!(cells[2..].iter().all(|c| *c == "100"), "{ce_row}");
    let by_kind: BTreeMap<_, _> = r.perturbations.iter().map(|s| (s.kind, s.fr)).collect();
    assert!(by_kind.values().all(|&v| (v - 1.0).abs() < 1e-12));
}
