use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use corruptbench_core::corpus::{synthetic_image_sized, CORPUS_SIDE, CORPUS_SIZE};
use corruptbench_core::corruptions::CorruptionKind;
use corruptbench_core::imaging::io::{save_image, ImageFormat};
use corruptbench_core::metrics::BaselineProfile;
use corruptbench_core::perturbations::{Difficulty, PerturbationKind};
use corruptbench_core::schedule::Schedule;
use corruptbench_harness::classify::{predict, Model, ToyClassifier};
use corruptbench_harness::evaluate::{evaluate, EvalOptions};
use corruptbench_harness::generate::{
    generate_corruptions, generate_perturbations, CorruptionOptions, GenOptions, PerturbationOptions, Preset,
};
use corruptbench_harness::manifest::{Layout, Manifest};
use corruptbench_harness::render::{self, ReportFormat};
use corruptbench_harness::validate::{labels_tsv, read_labels, read_predictions, validate_predictions, write_predictions};
use corruptbench_harness::{core_exit_code, exit, HarnessError};

/// Corruption and perturbation robustness benchmark toolkit.
#[derive(Parser)]
#[command(name = "corruptbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corruption dataset from a source image tree.
    GenC(GenC),
    /// Generate perturbation sequences from a source image tree.
    GenP(GenP),
    /// Check a dataset against its manifest, and optionally a prediction log.
    Validate(Validate),
    /// Score a prediction log.
    Eval(Eval),
    /// Re-render a saved report.
    Report(Report),
    /// Baseline profiles.
    #[command(subcommand)]
    Profiles(Profiles),
    /// Run a built-in classifier over a dataset and write a prediction log.
    Predict(Predict),
    /// Write the synthetic calibration corpus and its toy-classifier labels.
    SynthCorpus(SynthCorpus),
}

#[derive(Args)]
struct Common {
    /// Source image directory.
    src: PathBuf,
    /// Output directory.
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Severity schedule file.
    #[arg(long, env = "CORRUPTION_BENCH_SCHEDULE")]
    schedule: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Resize before corrupting: native, imagenet (256 → 224) or inception (342 → 299).
    #[arg(long, default_value = "native")]
    preset: String,
}

#[derive(Args)]
struct GenC {
    #[command(flatten)]
    common: Common,
    /// Comma-separated kind names, `benchmark`, `validation` or `all`.
    #[arg(long, default_value = "benchmark")]
    kinds: String,
    /// Comma-separated severities.
    #[arg(long, default_value = "1,2,3,4,5")]
    severities: String,
    /// `jpeg` or `png`.
    #[arg(long, default_value = "jpeg")]
    format: String,
    #[arg(long, default_value_t = 85)]
    quality: u8,
    /// Also write the sources under `clean/` for clean-error measurement.
    #[arg(long)]
    with_clean: bool,
    /// Directory of frost texture photographs.
    #[arg(long)]
    frost_textures: Option<PathBuf>,
}

#[derive(Args)]
struct GenP {
    #[command(flatten)]
    common: Common,
    /// Comma-separated kind names, `benchmark`, `validation` or `all`.
    #[arg(long, default_value = "benchmark")]
    kinds: String,
    #[arg(long, default_value_t = 31)]
    frames: usize,
    /// `normal` or `hard`.
    #[arg(long, default_value = "normal")]
    difficulty: String,
    /// `directory` or `stack`.
    #[arg(long, default_value = "directory")]
    layout: String,
}

#[derive(Args)]
struct Validate {
    /// Manifest file or dataset directory.
    manifest: PathBuf,
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Skip re-hashing output files.
    #[arg(long)]
    no_hash: bool,
}

#[derive(Args)]
struct Eval {
    /// Manifest file or dataset directory.
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// `id<TAB>class` file, keyed by source or item id.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Built-in profile name or profile file.
    #[arg(long, default_value = "alexnet-paper")]
    baseline: String,
    /// Frame distance for temporal sequences.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    stride: u8,
    /// Fail unless Relative mCE can be computed.
    #[arg(long)]
    relative: bool,
    /// Output format: text, csv, json or plots.
    #[arg(long, default_value = "text")]
    format: String,
    /// Output file (plots: directory). Standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also save the report as JSON.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct Report {
    /// Report saved as JSON or CSV.
    report: PathBuf,
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Profiles {
    /// List built-in profiles.
    List,
    /// Print a profile as TOML.
    Show { name: String },
}

#[derive(Args)]
struct Predict {
    /// Manifest file or dataset directory.
    manifest: PathBuf,
    /// constant, flip or toy.
    #[arg(long, default_value = "toy")]
    model: String,
    #[arg(long, default_value_t = 10)]
    topk: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct SynthCorpus {
    out: PathBuf,
    #[arg(long, default_value_t = CORPUS_SIZE)]
    count: usize,
    #[arg(long, default_value_t = CORPUS_SIDE)]
    side: usize,
}

fn parse_list<T>(s: &str, all: &[T], benchmark: &[T], validation: &[T]) -> anyhow::Result<Vec<T>>
where
    T: Copy + PartialEq + std::str::FromStr<Err = corruptbench_core::Error>,
{
    let mut out: Vec<T> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let add: Vec<T> = match part {
            "all" => all.to_vec(),
            "benchmark" => benchmark.to_vec(),
            "validation" => validation.to_vec(),
            name => vec![name.parse()?],
        };
        for k in add {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    Ok(out)
}

fn gen_options(c: &Common) -> anyhow::Result<GenOptions> {
    let schedule = match &c.schedule {
        Some(p) => Schedule::load(p).with_context(|| format!("schedule {}", p.display()))?,
        None => Schedule::default(),
    };
    Ok(GenOptions { seed: c.seed, schedule, jobs: c.jobs, preset: c.preset.parse::<Preset>()? })
}

fn report_generation(m: &Manifest, out: &Path) -> anyhow::Result<i32> {
    let files: usize = m.records.iter().map(|r| r.outputs.len()).sum();
    println!("{} records, {files} files, manifest {}", m.records.len(), m.content_hash());
    println!("wrote {}", out.join(corruptbench_harness::manifest::MANIFEST_FILE).display());
    if m.complete {
        Ok(exit::OK)
    } else {
        for e in &m.errors {
            eprintln!("error: {}: {}", e.id, e.message);
        }
        eprintln!("manifest marked incomplete: {} item(s) failed", m.errors.len());
        Ok(exit::VALIDATION)
    }
}

fn emit(text: Option<String>) -> anyhow::Result<()> {
    if let Some(t) = text {
        std::io::stdout().write_all(t.as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::GenC(a) => {
            let opts = gen_options(&a.common)?;
            let format = match a.format.as_str() {
                "jpeg" | "jpg" => ImageFormat::Jpeg { quality: a.quality },
                "png" => ImageFormat::Png,
                f => return Err(HarnessError::Parameter(format!("unknown image format `{f}` (jpeg, png)")).into()),
            };
            let severities = a
                .severities
                .split(',')
                .map(|s| s.trim().parse::<u8>().map_err(|e| HarnessError::Parameter(format!("severity `{s}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let c = CorruptionOptions {
                kinds: parse_list(&a.kinds, &CorruptionKind::ALL, &CorruptionKind::BENCHMARK, &CorruptionKind::VALIDATION)?,
                severities,
                format,
                with_clean: a.with_clean,
                frost_textures: a.frost_textures,
            };
            let m = generate_corruptions(&a.common.src, &a.common.out, &opts, &c)?;
            report_generation(&m, &a.common.out)
        }
        Command::GenP(a) => {
            let opts = gen_options(&a.common)?;
            let layout = match a.layout.as_str() {
                "directory" => Layout::Directory,
                "stack" => Layout::Stack,
                l => return Err(HarnessError::Parameter(format!("unknown layout `{l}` (directory, stack)")).into()),
            };
            let p = PerturbationOptions {
                kinds: parse_list(
                    &a.kinds,
                    &PerturbationKind::ALL,
                    &PerturbationKind::BENCHMARK,
                    &PerturbationKind::VALIDATION,
                )?,
                n_frames: a.frames,
                difficulty: a.difficulty.parse::<Difficulty>()?,
                layout,
            };
            let m = generate_perturbations(&a.common.src, &a.common.out, &opts, &p)?;
            report_generation(&m, &a.common.out)
        }
        Command::Validate(a) => {
            let (m, root) = Manifest::open(&a.manifest)?;
            let mut d = if a.no_hash { Default::default() } else { m.verify(&root) };
            if let Some(p) = &a.predictions {
                d.extend(validate_predictions(&m, &read_predictions(p)?));
            }
            eprint!("{}", d.render());
            if d.is_ok() {
                println!("ok: {} records", m.records.len());
                Ok(exit::OK)
            } else {
                println!("{} defect(s)", d.errors.len());
                Ok(exit::VALIDATION)
            }
        }
        Command::Eval(a) => {
            let format: ReportFormat = a.format.parse()?;
            let (m, _) = Manifest::open(&a.manifest)?;
            let preds = read_predictions(&a.predictions)?;
            let labels = a.labels.as_deref().map(read_labels).transpose()?;
            let baseline = BaselineProfile::resolve(&a.baseline)?;
            let opts = EvalOptions { stride: usize::from(a.stride), require_relative: a.relative };
            let (report, d) = evaluate(&m, &preds, labels.as_ref(), &baseline, &opts)?;
            eprint!("{}", d.render());
            if let Some(path) = &a.save {
                std::fs::write(path, render::to_json(&report)).with_context(|| path.display().to_string())?;
            }
            emit(render::render(&report, format, a.out.as_deref())?)?;
            Ok(exit::OK)
        }
        Command::Report(a) => {
            let report = render::read_report(&a.report)?;
            emit(render::render(&report, a.format.parse()?, a.out.as_deref())?)?;
            Ok(exit::OK)
        }
        Command::Profiles(Profiles::List) => {
            for name in BaselineProfile::builtin_names() {
                let p = BaselineProfile::builtin(name).expect("listed");
                println!("{name}\t{}", p.hash());
            }
            Ok(exit::OK)
        }
        Command::Profiles(Profiles::Show { name }) => {
            print!("{}", BaselineProfile::resolve(&name)?.to_toml());
            Ok(exit::OK)
        }
        Command::Predict(a) => {
            let model: Model = a.model.parse()?;
            let (m, root) = Manifest::open(&a.manifest)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
            let preds = pool.install(|| predict(&m, &root, model, a.topk))?;
            write_predictions(&a.out, &preds)?;
            println!("{} predictions written to {}", preds.len(), a.out.display());
            Ok(exit::OK)
        }
        Command::SynthCorpus(a) => {
            std::fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
            let toy = ToyClassifier::default();
            let mut labels = BTreeMap::new();
            for i in 0..a.count {
                let img = synthetic_image_sized(i, a.side, a.side);
                let id = format!("img_{i:03}");
                save_image(&img, a.out.join(format!("{id}.png")), ImageFormat::Png)?;
                labels.insert(id, toy.rank(&img, 1)[0]);
            }
            let path = a.out.join("labels.tsv");
            std::fs::write(&path, labels_tsv(&labels)).with_context(|| path.display().to_string())?;
            println!("wrote {} images and {}", a.count, path.display());
            Ok(exit::OK)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<HarnessError>() {
            return e.exit_code();
        }
        if let Some(e) = cause.downcast_ref::<corruptbench_core::Error>() {
            return core_exit_code(e);
        }
        if cause.is::<std::io::Error>() {
            return exit::IO;
        }
        if cause.is::<rayon::ThreadPoolBuildError>() {
            return exit::PARAMETER;
        }
    }
    exit::IO
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::PARAMETER as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
