//! Prints corpus-mean distortion per corruption kind and severity.
//!
//! `cargo run --release -p corruptbench-core --example calibrate [--l2-only] [schedule.toml]`

use std::thread;
use std::time::Instant;

use corruptbench_core::corpus::synthetic_corpus;
use corruptbench_core::corruptions::{apply_corruption, CorruptionKind, CorruptionSpec};
use corruptbench_core::imaging::{mean_l2, ssim};
use corruptbench_core::schedule::Schedule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let l2_only = args.iter().any(|a| a == "--l2-only");
    let schedule = match args.iter().find(|a| !a.starts_with("--")) {
        Some(path) => Schedule::load(path)?,
        None => Schedule::default(),
    };
    let corpus = synthetic_corpus();
    println!("{:<15} {:>38} | {:>38}", "kind", "mean_l2 s1..s5", "1-ssim s1..s5");
    for kind in CorruptionKind::ALL {
        let started = Instant::now();
        let rows: Vec<[(f64, f64); 5]> = thread::scope(|scope| {
            let handles: Vec<_> = corpus
                .iter()
                .enumerate()
                .map(|(i, img)| {
                    let schedule = &schedule;
                    scope.spawn(move || {
                        let mut row = [(0.0, 0.0); 5];
                        for s in 1..=5u8 {
                            let spec = CorruptionSpec::new(kind, s, i as u64).expect("severity");
                            let out = apply_corruption(img, &spec, schedule).expect("corrupt");
                            row[usize::from(s - 1)] = (
                                mean_l2(img, &out).unwrap(),
                                if l2_only { f64::NAN } else { 1.0 - ssim(img, &out).unwrap() },
                            );
                        }
                        row
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker")).collect()
        });
        let n = rows.len() as f64;
        let mean = |f: fn(&(f64, f64)) -> f64, s: usize| rows.iter().map(|r| f(&r[s])).sum::<f64>() / n;
        let l2: Vec<String> = (0..5).map(|s| format!("{:.4}", mean(|p| p.0, s))).collect();
        let ss: Vec<String> = (0..5).map(|s| format!("{:.4}", mean(|p| p.1, s))).collect();
        println!(
            "{:<15} {:>38} | {:>38} {:>6.1}s",
            kind.name(),
            l2.join(" "),
            ss.join(" "),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
