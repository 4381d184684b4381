//! Dataset generation from a source image tree.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use corruptbench_core::corruptions::{CorruptionKind, CorruptionSpec, Corruptor};
use corruptbench_core::imaging::io::{decode_image, encode_image, ImageFormat, CODEC_ID};
use corruptbench_core::imaging::{resample, Filter};
use corruptbench_core::perturbations::{generate_sequence, Difficulty, PerturbationKind, PerturbationSpec};
use corruptbench_core::schedule::Schedule;
use corruptbench_core::{ImageBuffer, RandomStream};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::manifest::{
    Dataset, ItemError, ItemSpec, Layout, Manifest, Output, Record, SourceEntry, MANIFEST_FORMAT, NOTICE,
    TOOLKIT_VERSION,
};
use crate::sources::{discover, sha256_file, sha256_hex, write_file, SourceImage};
use crate::validate::clean_id;

/// Output resolution presets applied to sources before corrupting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preset {
    /// Sources as they are.
    #[default]
    Native,
    /// Shorter side to 256, centre crop 224.
    Imagenet,
    /// Shorter side to 342, centre crop 299.
    Inception,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Native => "native",
            Preset::Imagenet => "imagenet",
            Preset::Inception => "inception",
        }
    }

    pub fn apply(self, img: ImageBuffer) -> Result<ImageBuffer> {
        let (short, crop) = match self {
            Preset::Native => return Ok(img),
            Preset::Imagenet => (256, 224),
            Preset::Inception => (342, 299),
        };
        let (w, h) = img.dimensions();
        let scale = short as f64 / w.min(h) as f64;
        let (nw, nh) = ((w as f64 * scale).round() as usize, (h as f64 * scale).round() as usize);
        let filter = if scale < 1.0 { Filter::Box } else { Filter::Bilinear };
        let resized = resample(&img, nw.max(short), nh.max(short), filter)?;
        let (rw, rh) = resized.dimensions();
        Ok(resized.crop((rw - crop) / 2, (rh - crop) / 2, crop, crop)?)
    }
}

impl FromStr for Preset {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [Preset::Native, Preset::Imagenet, Preset::Inception]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::Parameter(format!("unknown preset `{s}` (native, imagenet, inception)")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by both generators.
#[derive(Clone, Debug)]
pub struct GenOptions {
    pub seed: u64,
    pub schedule: Schedule,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
    pub preset: Preset,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self { seed: 0, schedule: Schedule::default(), jobs: 0, preset: Preset::Native }
    }
}

#[derive(Clone, Debug)]
pub struct CorruptionOptions {
    pub kinds: Vec<CorruptionKind>,
    pub severities: Vec<u8>,
    pub format: ImageFormat,
    /// Also write each (preset-adjusted) source under `clean/`.
    pub with_clean: bool,
    /// Directory of frost textures; procedural frost when absent.
    pub frost_textures: Option<PathBuf>,
}

impl Default for CorruptionOptions {
    fn default() -> Self {
        Self {
            kinds: CorruptionKind::BENCHMARK.to_vec(),
            severities: vec![1, 2, 3, 4, 5],
            format: ImageFormat::Jpeg { quality: 85 },
            with_clean: false,
            frost_textures: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PerturbationOptions {
    pub kinds: Vec<PerturbationKind>,
    pub n_frames: usize,
    pub difficulty: Difficulty,
    pub layout: Layout,
}

impl Default for PerturbationOptions {
    fn default() -> Self {
        Self {
            kinds: PerturbationKind::BENCHMARK.to_vec(),
            n_frames: corruptbench_core::perturbations::MIN_FRAMES,
            difficulty: Difficulty::Normal,
            layout: Layout::Directory,
        }
    }
}

/// Seed of one generated item, independent of worker scheduling.
pub fn item_seed(seed: u64, source_id: &str, kind: &str, severity: Option<u8>) -> u64 {
    let s = RandomStream::new(seed).tag(source_id).tag(kind);
    match severity {
        Some(v) => s.tag(u64::from(v)),
        None => s,
    }
    .derive_seed()
}

fn format_name(format: ImageFormat) -> String {
    match format {
        ImageFormat::Png => "png".into(),
        ImageFormat::Jpeg { quality } => format!("jpeg-q{quality}"),
    }
}

fn with_extension(rel: &str, format: ImageFormat) -> String {
    let stem = Path::new(rel).with_extension("");
    format!("{}.{}", stem.to_str().expect("utf-8 checked at discovery"), format.extension())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Parameter(format!("cannot start {jobs} worker(s): {e}")))
}

fn base_manifest(dataset: Dataset, src: &Path, sources: &[SourceImage], opts: &GenOptions) -> Result<Manifest> {
    let entries = sources
        .iter()
        .map(|s| Ok(SourceEntry { id: s.id.clone(), path: s.rel_path.clone(), sha256: sha256_file(&s.path)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Manifest {
        format: MANIFEST_FORMAT.into(),
        benchmark_only: true,
        notice: NOTICE.into(),
        toolkit_version: TOOLKIT_VERSION.into(),
        dataset,
        schedule_hash: opts.schedule.hash(),
        baseline: None,
        codec: CODEC_ID.into(),
        source_root: src.to_string_lossy().into_owned(),
        seed: opts.seed,
        image_format: String::new(),
        preset: opts.preset.name().into(),
        frost: None,
        difficulty: None,
        n_frames: None,
        layout: None,
        sources: entries,
        records: Vec::new(),
        complete: true,
        errors: Vec::new(),
    })
}

fn load_source(s: &SourceImage, preset: Preset) -> Result<ImageBuffer> {
    let bytes = std::fs::read(&s.path).map_err(|e| HarnessError::io(&s.path, e))?;
    preset.apply(decode_image(&bytes)?)
}

fn save(out: &Path, rel: String, img: &ImageBuffer, format: ImageFormat) -> Result<Output> {
    let bytes = encode_image(img, format)?;
    write_file(&out.join(&rel), &bytes)?;
    Ok(Output { path: rel, sha256: sha256_hex(&bytes) })
}

type ItemResult = std::result::Result<Record, ItemError>;

fn finish(mut manifest: Manifest, results: Vec<Vec<ItemResult>>, out: &Path) -> Result<Manifest> {
    for r in results.into_iter().flatten() {
        match r {
            Ok(rec) => manifest.records.push(rec),
            Err(e) => manifest.errors.push(e),
        }
    }
    manifest.complete = manifest.errors.is_empty();
    manifest.save(out)?;
    Ok(manifest)
}

/// Writes `<out>/<kind>/<severity>/<relative source path>` for every source,
/// kind and severity, plus `manifest.json`.
pub fn generate_corruptions(src: &Path, out: &Path, opts: &GenOptions, c: &CorruptionOptions) -> Result<Manifest> {
    opts.schedule.validate()?;
    if c.kinds.is_empty() || c.severities.is_empty() {
        return Err(HarnessError::Parameter("nothing to generate: empty kind or severity filter".into()));
    }
    if let Some(&s) = c.severities.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(HarnessError::Parameter(format!("severity must be in 1..=5, got {s}")));
    }
    let sources = discover(src)?;
    let mut manifest = base_manifest(Dataset::Corruptions, src, &sources, opts)?;
    manifest.image_format = format_name(c.format);

    let mut corruptor = Corruptor::new(opts.schedule.clone());
    manifest.frost = Some("procedural".into());
    if let Some(dir) = &c.frost_textures {
        let files = discover(dir)?;
        let mut digest = String::new();
        let mut textures = Vec::with_capacity(files.len());
        for f in &files {
            digest += &sha256_file(&f.path)?;
            textures.push(load_source(f, Preset::Native)?);
        }
        manifest.frost = Some(format!("textures:{}", sha256_hex(digest.as_bytes())));
        corruptor = corruptor.with_frost_textures(textures);
    }
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let work = |s: &SourceImage| -> Vec<ItemResult> {
        let mut items = Vec::new();
        let img = match load_source(s, opts.preset) {
            Ok(img) => img,
            Err(e) => return vec![Err(ItemError { id: s.id.clone(), message: e.to_string() })],
        };
        if c.with_clean {
            let id = clean_id(&s.id);
            items.push(
                save(out, format!("clean/{}", with_extension(&s.rel_path, c.format)), &img, c.format)
                    .map(|o| Record { id: id.clone(), source_id: s.id.clone(), spec: ItemSpec::Clean, mode: None, outputs: vec![o] })
                    .map_err(|e| ItemError { id, message: e.to_string() }),
            );
        }
        for &kind in &c.kinds {
            for &sev in &c.severities {
                let id = format!("{kind}/{sev}/{}", s.id);
                let spec = CorruptionSpec { kind, severity: sev, seed: item_seed(opts.seed, &s.id, kind.name(), Some(sev)) };
                let rel = format!("{kind}/{sev}/{}", with_extension(&s.rel_path, c.format));
                let result = corruptor
                    .apply(&img, &spec)
                    .map_err(HarnessError::from)
                    .and_then(|corrupted| save(out, rel, &corrupted, c.format));
                items.push(
                    result
                        .map(|o| Record {
                            id: id.clone(),
                            source_id: s.id.clone(),
                            spec: ItemSpec::Corruption(spec),
                            mode: None,
                            outputs: vec![o],
                        })
                        .map_err(|e| ItemError { id, message: e.to_string() }),
                );
            }
        }
        items
    };
    let results = pool(opts.jobs)?.install(|| sources.par_iter().map(work).collect::<Vec<_>>());
    finish(manifest, results, out)
}

/// Frame file name for index `j` of an `n`-frame sequence.
pub fn frame_name(j: usize, n: usize) -> String {
    let digits = (n.saturating_sub(1)).to_string().len().max(2);
    format!("frame_{j:0digits$}.png")
}

/// Writes one sequence per source and kind, plus `manifest.json`.
pub fn generate_perturbations(src: &Path, out: &Path, opts: &GenOptions, p: &PerturbationOptions) -> Result<Manifest> {
    opts.schedule.validate()?;
    if p.kinds.is_empty() {
        return Err(HarnessError::Parameter("nothing to generate: empty kind filter".into()));
    }
    // Rejects short sequences before any work.
    PerturbationSpec::new(p.kinds[0], p.n_frames, p.difficulty, 0)?;
    let sources = discover(src)?;
    let mut manifest = base_manifest(Dataset::Perturbations, src, &sources, opts)?;
    manifest.image_format = format_name(ImageFormat::Png);
    manifest.difficulty = Some(p.difficulty);
    manifest.n_frames = Some(p.n_frames);
    manifest.layout = Some(p.layout);
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let units: Vec<(&SourceImage, PerturbationKind)> =
        sources.iter().flat_map(|s| p.kinds.iter().map(move |&k| (s, k))).collect();
    let work = |&(s, kind): &(&SourceImage, PerturbationKind)| -> Vec<ItemResult> {
        let id = format!("{kind}/{}", s.id);
        let result = (|| -> Result<Record> {
            let img = load_source(s, opts.preset)?;
            let spec = PerturbationSpec::new(kind, p.n_frames, p.difficulty, item_seed(opts.seed, &s.id, kind.name(), None))?;
            let seq = generate_sequence(&img, &spec, &opts.schedule)?;
            let outputs = match p.layout {
                Layout::Directory => seq
                    .frames
                    .iter()
                    .enumerate()
                    .map(|(j, f)| save(out, format!("{kind}/{}/{}", s.id, frame_name(j, p.n_frames)), f, ImageFormat::Png))
                    .collect::<Result<Vec<_>>>()?,
                Layout::Stack => vec![save(out, format!("{kind}/{}.png", s.id), &stack(&seq.frames), ImageFormat::Png)?],
            };
            Ok(Record { id: id.clone(), source_id: s.id.clone(), spec: ItemSpec::Perturbation(spec), mode: Some(seq.mode), outputs })
        })();
        vec![result.map_err(|e| ItemError { id, message: e.to_string() })]
    };
    let results = pool(opts.jobs)?.install(|| units.par_iter().map(work).collect::<Vec<_>>());
    finish(manifest, results, out)
}

/// Frames stacked top to bottom into one image.
pub fn stack(frames: &[ImageBuffer]) -> ImageBuffer {
    let (w, h) = frames[0].dimensions();
    let mut data = Vec::with_capacity(w * h * 3 * frames.len());
    for f in frames {
        data.extend_from_slice(f.data());
    }
    ImageBuffer::from_raw(w, h * frames.len(), data).expect("frames share dimensions")
}

/// Inverse of [`stack`].
pub fn unstack(img: &ImageBuffer, n_frames: usize) -> Result<Vec<ImageBuffer>> {
    let (w, h) = img.dimensions();
    if n_frames == 0 || h % n_frames != 0 {
        return Err(HarnessError::Format(format!("a {w}×{h} stack cannot hold {n_frames} equal frames")));
    }
    let fh = h / n_frames;
    (0..n_frames).map(|j| Ok(img.crop(0, j * fh, w, fh)?)).collect()
}
