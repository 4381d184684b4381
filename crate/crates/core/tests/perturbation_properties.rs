//! Structural properties of generated perturbation sequences.

use corruptbench_core::corpus::synthetic_image;
use corruptbench_core::imaging::mean_l2;
use corruptbench_core::perturbations::{
    frame_pairs, generate_sequence, Difficulty, Mode, PerturbationKind, PerturbationSpec,
};
use corruptbench_core::schedule::Schedule;
use corruptbench_core::ImageBuffer;

fn spec(kind: PerturbationKind, seed: u64) -> PerturbationSpec {
    PerturbationSpec::new(kind, 31, Difficulty::Normal, seed).unwrap()
}

/// Per-frame corpus means of `mean_l2(frame 0, frame j)`.
fn anchored_curve(kind: PerturbationKind, images: usize) -> Vec<f64> {
    let schedule = Schedule::default();
    let mut curve = vec![0.0; 31];
    for i in 0..images {
        let seq = generate_sequence(&synthetic_image(i), &spec(kind, i as u64), &schedule).unwrap();
        for (j, f) in seq.frames.iter().enumerate() {
            curve[j] += mean_l2(&seq.frames[0], f).unwrap() / images as f64;
        }
    }
    curve
}

#[test]
fn noise_sequences_do_not_drift() {
    for kind in [PerturbationKind::GaussianNoise, PerturbationKind::ShotNoise, PerturbationKind::SpeckleNoise] {
        let ys = &anchored_curve(kind, 6)[1..];
        let n = ys.len() as f64;
        let xs: Vec<f64> = (1..=ys.len()).map(|j| j as f64).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
        let resid: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
        let se = (resid / (n - 2.0) / sxx).sqrt();
        assert!(slope.abs() < 3.0 * se, "{kind}: slope {slope:e} se {se:e}");
    }
}

#[test]
fn geometric_and_brightness_drift_grows() {
    for kind in [
        PerturbationKind::Translate,
        PerturbationKind::Rotate,
        PerturbationKind::Scale,
        PerturbationKind::Shear,
        PerturbationKind::Brightness,
    ] {
        let curve = anchored_curve(kind, 6);
        for j in 1..curve.len() {
            assert!(curve[j] >= curve[j - 1], "{kind}: frame {j} {} < {}", curve[j], curve[j - 1]);
        }
    }
}

/// Column centroid of dark ink in `x0..x1`, averaged over rows near the centre.
fn ink_centroid(img: &ImageBuffer, x0: usize, x1: usize) -> f64 {
    let (mut m, mut s) = (0.0, 0.0);
    let cy = img.height() / 2;
    for y in cy - 4..cy + 4 {
        for x in x0..x1 {
            let ink = 1.0 - f64::from(img.get(x, y, 0));
            m += ink * (x as f64 + 0.5);
            s += ink;
        }
    }
    m / s
}

#[test]
fn scale_magnification_matches_compounded_step() {
    // White field with two dark vertical bars placed symmetrically.
    let img = ImageBuffer::from_fn(224, 224, |x, _| if (60..64).contains(&x) || (160..164).contains(&x) { [0.0; 3] } else { [1.0; 3] });
    let schedule = Schedule::default();
    let s = spec(PerturbationKind::Scale, 0);
    let f = 1.0 + s.step(&schedule);
    let seq = generate_sequence(&img, &s, &schedule).unwrap();
    let spread = |im: &ImageBuffer| ink_centroid(im, 112, 224) - ink_centroid(im, 0, 112);
    let measured = spread(&seq.frames[30]) / spread(&seq.frames[0]);
    let expected = f.powi(30);
    assert!((measured / expected - 1.0).abs() < 0.02, "measured {measured}, expected {expected}");
}

#[test]
fn translate_slides_one_column_per_frame() {
    let img = synthetic_image(4);
    let seq = generate_sequence(&img, &spec(PerturbationKind::Translate, 0), &Schedule::default()).unwrap();
    let (w, h) = img.dimensions();
    for j in 1..31 {
        for y in 0..h {
            for x in 1..w - 1 - j {
                assert_eq!(seq.frames[j].pixel(x, y), seq.frames[j - 1].pixel(x + 1, y), "frame {j} ({x},{y})");
            }
        }
    }
}

#[test]
fn temporal_steps_are_small() {
    let schedule = Schedule::default();
    for kind in PerturbationKind::ALL.into_iter().filter(|k| k.mode() == Mode::Temporal) {
        let mut per_step = vec![0.0; 30];
        for i in 0..4 {
            let seq = generate_sequence(&synthetic_image(i), &spec(kind, i as u64), &schedule).unwrap();
            for j in 1..31 {
                per_step[j - 1] += mean_l2(&seq.frames[j - 1], &seq.frames[j]).unwrap() / 4.0;
            }
        }
        let worst = per_step.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 0.05, "{kind}: {worst}");
    }
}

#[test]
fn stride_two_pairs_by_enumeration() {
    let mut pairs = Vec::new();
    for later in 0..31 {
        for earlier in 0..later {
            if later - earlier == 2 {
                pairs.push((earlier, later));
            }
        }
    }
    assert_eq!(frame_pairs(Mode::Temporal, 31, 2).unwrap(), pairs);
    assert_eq!(pairs.len(), 29);
}
