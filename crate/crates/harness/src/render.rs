//! Report output: text tables, long-form CSV, JSON and SVG bar charts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use corruptbench_core::corruptions::{Category, CorruptionKind};
use corruptbench_core::metrics::{CorruptionScore, PerturbationScore, RobustnessReport};
use corruptbench_core::perturbations::PerturbationKind;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
    Plots,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plots" => Ok(Self::Plots),
            _ => Err(HarnessError::Parameter(format!("unknown report format `{s}` (text, csv, json, plots)"))),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON

pub fn to_json(report: &RobustnessReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<RobustnessReport> {
    serde_json::from_str(text).map_err(|e| HarnessError::Format(format!("report: {e}")))
}

pub fn read_report(path: &Path) -> Result<RobustnessReport> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "csv") {
        from_csv(&text)
    } else {
        from_json(&text)
    }
}

// ---------------------------------------------------------------------------
// Text

fn pct(v: f64) -> String {
    format!("{:.0}", 100.0 * v)
}

fn pct1(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// A header row of column names and one row of values per line.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub groups: Vec<(String, usize)>,
    pub header: Vec<String>,
    pub rows: Vec<(String, Vec<String>)>,
}

impl Table {
    fn render(&self, out: &mut String) {
        let label_w = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(8);
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                self.rows.iter().map(|(_, r)| r[c].len()).chain([self.header[c].len()]).max().unwrap_or(0)
            })
            .collect();
        let mut line = format!("{:label_w$}", "");
        let mut col = 0;
        for (name, span) in &self.groups {
            let w: usize = widths[col..col + span].iter().sum::<usize>() + 2 * (span - 1);
            let _ = write!(line, "  {name:^w$}");
            col += span;
        }
        let _ = writeln!(out, "{}", line.trim_end());
        let mut line = format!("{:label_w$}", "");
        for (h, w) in self.header.iter().zip(&widths) {
            let _ = write!(line, "  {h:>w$}");
        }
        let _ = writeln!(out, "{line}");
        for (label, row) in &self.rows {
            let mut line = format!("{label:label_w$}");
            for (v, w) in row.iter().zip(&widths) {
                let _ = write!(line, "  {v:>w$}");
            }
            let _ = writeln!(out, "{line}");
        }
    }
}

fn short_title(kind: CorruptionKind) -> &'static str {
    match kind {
        CorruptionKind::GaussianNoise => "Gauss.",
        CorruptionKind::ShotNoise => "Shot",
        CorruptionKind::ImpulseNoise => "Impulse",
        CorruptionKind::DefocusBlur => "Defocus",
        CorruptionKind::GlassBlur => "Glass",
        CorruptionKind::MotionBlur => "Motion",
        CorruptionKind::ZoomBlur => "Zoom",
        CorruptionKind::Snow => "Snow",
        CorruptionKind::Frost => "Frost",
        CorruptionKind::Fog => "Fog",
        CorruptionKind::Brightness => "Bright",
        CorruptionKind::Contrast => "Contrast",
        CorruptionKind::Elastic => "Elastic",
        CorruptionKind::Pixelate => "Pixel",
        CorruptionKind::Jpeg => "JPEG",
        CorruptionKind::SpeckleNoise => "Speckle",
        CorruptionKind::GaussianBlur => "G.Blur",
        CorruptionKind::Spatter => "Spatter",
        CorruptionKind::Saturate => "Saturate",
    }
}

const CATEGORIES: [(Category, &str); 4] =
    [(Category::Noise, "Noise"), (Category::Blur, "Blur"), (Category::Weather, "Weather"), (Category::Digital, "Digital")];

/// Clean error, mCE, then one CE column per kind grouped by category.
/// Benchmark kinds only; held-out kinds go to a separate table.
pub fn corruption_table(report: &RobustnessReport) -> Table {
    let scores: Vec<&CorruptionScore> = report.corruptions.iter().filter(|s| s.benchmark).collect();
    let mut groups = vec![(String::new(), 2)];
    let mut header = vec!["Error".to_string(), "mCE".to_string()];
    let mut ce = vec![report.clean_error.map_or("-".into(), pct1), report.mce.map_or("-".into(), pct1)];
    let mut rel = vec!["-".to_string(), report.relative_mce.map_or("-".into(), pct1)];
    for (cat, name) in CATEGORIES {
        let in_cat: Vec<_> = scores.iter().filter(|s| s.kind.category() == cat).collect();
        if in_cat.is_empty() {
            continue;
        }
        groups.push((name.to_string(), in_cat.len()));
        for s in in_cat {
            header.push(short_title(s.kind).into());
            ce.push(pct(s.ce));
            rel.push(s.relative_ce.map_or("-".into(), pct));
        }
    }
    let mut rows = vec![("CE".to_string(), ce)];
    if report.corruptions.iter().any(|s| s.relative_ce.is_some()) {
        rows.push(("Rel. CE".to_string(), rel));
    }
    Table { groups, header, rows }
}

fn perturbation_group(kind: PerturbationKind) -> &'static str {
    use PerturbationKind::*;
    match kind {
        GaussianNoise | ShotNoise | SpeckleNoise => "Noise",
        MotionBlur | ZoomBlur | GaussianBlur => "Blur",
        Snow | Brightness | Spatter => "Weather",
        Translate | Rotate | Tilt | Scale | Shear => "Digital",
    }
}

fn perturbation_title(kind: PerturbationKind) -> &'static str {
    use PerturbationKind::*;
    match kind {
        GaussianNoise => "Gauss.",
        ShotNoise => "Shot",
        SpeckleNoise => "Speckle",
        MotionBlur => "Motion",
        ZoomBlur => "Zoom",
        GaussianBlur => "G.Blur",
        Snow => "Snow",
        Brightness => "Bright",
        Spatter => "Spatter",
        Translate => "Translate",
        Rotate => "Rotate",
        Tilt => "Tilt",
        Scale => "Scale",
        Shear => "Shear",
    }
}

/// mFR/mT5D then one column per kind, one row each for FR and T5D.
pub fn perturbation_table(report: &RobustnessReport, benchmark: bool) -> Table {
    let scores: Vec<&PerturbationScore> = report.perturbations.iter().filter(|s| s.benchmark == benchmark).collect();
    let mut groups = vec![(String::new(), 1)];
    let mut header = vec!["Mean".to_string()];
    let (mfr, mt5d) = if benchmark { (report.mfr, report.mt5d) } else { (None, None) };
    let mut fr = vec![mfr.map_or("-".into(), pct1)];
    let mut t5 = vec![mt5d.map_or("-".into(), pct1)];
    for name in ["Noise", "Blur", "Weather", "Digital"] {
        let in_group: Vec<_> = scores.iter().filter(|s| perturbation_group(s.kind) == name).collect();
        if in_group.is_empty() {
            continue;
        }
        groups.push((name.to_string(), in_group.len()));
        for s in in_group {
            header.push(perturbation_title(s.kind).into());
            fr.push(pct(s.fr));
            t5.push(s.t5d.map_or("-".into(), pct));
        }
    }
    Table { groups, header, rows: vec![("FR".into(), fr), ("T5D".into(), t5)] }
}

pub fn to_text(report: &RobustnessReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "baseline    {} ({})", report.baseline, short_hash(&report.baseline_hash));
    if let Some(h) = &report.manifest_hash {
        let _ = writeln!(out, "manifest    {}", short_hash(h));
    }
    if let Some(d) = &report.difficulty {
        let _ = writeln!(out, "difficulty  {d}");
    }
    if let Some(s) = report.stride {
        let _ = writeln!(out, "stride      {s}");
    }
    if !report.corruptions.is_empty() {
        let _ = writeln!(out, "\nCorruption errors (%), relative to the baseline");
        corruption_table(report).render(&mut out);
        let held_out: Vec<_> = report.corruptions.iter().filter(|s| !s.benchmark).collect();
        if !held_out.is_empty() {
            let _ = writeln!(out, "\nHeld-out corruptions (%)");
            let table = Table {
                groups: vec![(String::new(), held_out.len())],
                header: held_out.iter().map(|s| short_title(s.kind).to_string()).collect(),
                rows: vec![("CE".into(), held_out.iter().map(|s| pct(s.ce)).collect())],
            };
            table.render(&mut out);
        }
    }
    if !report.perturbations.is_empty() {
        if report.perturbations.iter().any(|s| s.benchmark) {
            let _ = writeln!(out, "\nFlip rates and top-5 distances (%), relative to the baseline");
            perturbation_table(report, true).render(&mut out);
        }
        if report.perturbations.iter().any(|s| !s.benchmark) {
            let _ = writeln!(out, "\nHeld-out perturbations (%)");
            perturbation_table(report, false).render(&mut out);
        }
    }
    out
}

fn short_hash(h: &str) -> &str {
    &h[..h.len().min(12)]
}

// ---------------------------------------------------------------------------
// CSV

const CSV_HEADER: [&str; 4] = ["section", "kind", "metric", "value"];

/// Long form: one `section,kind,metric,value` row per number. Floats use the
/// shortest representation that parses back to the same value.
pub fn to_csv(report: &RobustnessReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    let mut row = |section: &str, kind: &str, metric: &str, value: String| {
        w.write_record([section, kind, metric, value.as_str()]).expect("in-memory write");
    };
    row("meta", "", "baseline", report.baseline.clone());
    row("meta", "", "baseline_hash", report.baseline_hash.clone());
    if let Some(h) = &report.manifest_hash {
        row("meta", "", "manifest_hash", h.clone());
    }
    if let Some(d) = &report.difficulty {
        row("meta", "", "difficulty", d.clone());
    }
    if let Some(s) = report.stride {
        row("meta", "", "stride", s.to_string());
    }
    for (name, v) in [
        ("clean_error", report.clean_error),
        ("mce", report.mce),
        ("relative_mce", report.relative_mce),
        ("mfr", report.mfr),
        ("mt5d", report.mt5d),
    ] {
        if let Some(v) = v {
            row("aggregate", "", name, v.to_string());
        }
    }
    for s in &report.corruptions {
        let k = s.kind.name();
        for (i, e) in s.errors.iter().enumerate() {
            row("corruption", k, &format!("error_s{}", i + 1), e.to_string());
        }
        row("corruption", k, "ce", s.ce.to_string());
        if let Some(r) = s.relative_ce {
            row("corruption", k, "relative_ce", r.to_string());
        }
    }
    for s in &report.perturbations {
        let k = s.kind.name();
        row("perturbation", k, "fp", s.fp.to_string());
        row("perturbation", k, "fr", s.fr.to_string());
        if let Some(u) = s.ut5d {
            row("perturbation", k, "ut5d", u.to_string());
        }
        if let Some(t) = s.t5d {
            row("perturbation", k, "t5d", t.to_string());
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn from_csv(text: &str) -> Result<RobustnessReport> {
    let bad = |line: u64, msg: String| HarnessError::Format(format!("report csv line {line}: {msg}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(1, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut report = RobustnessReport::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| HarnessError::Format(format!("report csv: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let (section, kind, metric, value) = (&rec[0], &rec[1], &rec[2], &rec[3]);
        let num = || value.parse::<f64>().map_err(|e| bad(line, format!("`{value}`: {e}")));
        match section {
            "meta" => match metric {
                "baseline" => report.baseline = value.into(),
                "baseline_hash" => report.baseline_hash = value.into(),
                "manifest_hash" => report.manifest_hash = Some(value.into()),
                "difficulty" => report.difficulty = Some(value.into()),
                "stride" => report.stride = Some(value.parse().map_err(|e| bad(line, format!("stride: {e}")))?),
                _ => return Err(bad(line, format!("unknown meta field `{metric}`"))),
            },
            "aggregate" => {
                let slot = match metric {
                    "clean_error" => &mut report.clean_error,
                    "mce" => &mut report.mce,
                    "relative_mce" => &mut report.relative_mce,
                    "mfr" => &mut report.mfr,
                    "mt5d" => &mut report.mt5d,
                    _ => return Err(bad(line, format!("unknown aggregate `{metric}`"))),
                };
                *slot = Some(num()?);
            }
            "corruption" => {
                let kind: CorruptionKind = kind.parse().map_err(|e: corruptbench_core::Error| bad(line, e.to_string()))?;
                if report.corruptions.last().is_none_or(|s| s.kind != kind) {
                    report.corruptions.push(CorruptionScore {
                        kind,
                        benchmark: kind.is_benchmark(),
                        errors: [0.0; 5],
                        ce: 0.0,
                        relative_ce: None,
                    });
                }
                let s = report.corruptions.last_mut().expect("just pushed");
                match metric {
                    "ce" => s.ce = num()?,
                    "relative_ce" => s.relative_ce = Some(num()?),
                    m => {
                        let i: usize = m
                            .strip_prefix("error_s")
                            .and_then(|i| i.parse().ok())
                            .filter(|i| (1..=5).contains(i))
                            .ok_or_else(|| bad(line, format!("unknown corruption metric `{m}`")))?;
                        s.errors[i - 1] = num()?;
                    }
                }
            }
            "perturbation" => {
                let kind: PerturbationKind =
                    kind.parse().map_err(|e: corruptbench_core::Error| bad(line, e.to_string()))?;
                if report.perturbations.last().is_none_or(|s| s.kind != kind) {
                    report.perturbations.push(PerturbationScore {
                        kind,
                        benchmark: kind.is_benchmark(),
                        fp: 0.0,
                        fr: 0.0,
                        ut5d: None,
                        t5d: None,
                    });
                }
                let s = report.perturbations.last_mut().expect("just pushed");
                match metric {
                    "fp" => s.fp = num()?,
                    "fr" => s.fr = num()?,
                    "ut5d" => s.ut5d = Some(num()?),
                    "t5d" => s.t5d = Some(num()?),
                    _ => return Err(bad(line, format!("unknown perturbation metric `{metric}`"))),
                }
            }
            _ => return Err(bad(line, format!("unknown section `{section}`"))),
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Plots

/// A horizontal-label bar chart with a dashed reference line at 100%.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let (left, top, bar_w, gap, plot_h) = (56.0, 40.0, 28.0, 10.0, 240.0);
    let max = bars.iter().map(|b| b.1).fold(1.0_f64, f64::max) * 1.1;
    let width = left + bars.len() as f64 * (bar_w + gap) + gap + 20.0;
    let height = top + plot_h + 110.0;
    let y = |v: f64| top + plot_h * (1.0 - v / max);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(s, r##"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="#333"/>"##, top + plot_h);
    let mut tick = 0.0;
    while tick <= max {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}%</text>"#, left - 6.0, y(tick) + 4.0, tick * 100.0);
        tick += 0.25;
    }
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = left + gap + i as f64 * (bar_w + gap);
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{:.1}" width="{bar_w}" height="{:.1}" fill="#4c72b0"><title>{}: {:.1}%</title></rect>"##,
            y(*v),
            plot_h * v / max,
            escape(label),
            v * 100.0
        );
        let (lx, ly) = (x + bar_w / 2.0, top + plot_h + 10.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" transform="rotate(60 {lx:.1} {ly:.1})">{}</text>"#,
            escape(label)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#c44e52" stroke-dasharray="4 3"/>"##,
        y(1.0),
        width - 10.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes one chart per populated measure into `dir`.
pub fn write_plots(report: &RobustnessReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut charts = Vec::new();
    if !report.corruptions.is_empty() {
        let bars = report.corruptions.iter().map(|s| (s.kind.title().to_string(), s.ce)).collect::<Vec<_>>();
        charts.push(("corruption_ce.svg", "Corruption Error", bars));
        let rel: Vec<_> =
            report.corruptions.iter().filter_map(|s| s.relative_ce.map(|r| (s.kind.title().to_string(), r))).collect();
        if !rel.is_empty() {
            charts.push(("corruption_relative_ce.svg", "Relative Corruption Error", rel));
        }
    }
    if !report.perturbations.is_empty() {
        let fr = report.perturbations.iter().map(|s| (s.kind.title().to_string(), s.fr)).collect();
        charts.push(("perturbation_fr.svg", "Flip Rate", fr));
        let t5: Vec<_> =
            report.perturbations.iter().filter_map(|s| s.t5d.map(|t| (s.kind.title().to_string(), t))).collect();
        if !t5.is_empty() {
            charts.push(("perturbation_t5d.svg", "Top-5 Distance", t5));
        }
    }
    let mut written = Vec::new();
    for (file, title, bars) in charts {
        let path = dir.join(file);
        fs::write(&path, bar_chart_svg(title, &bars)).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Renders `report` as `format`. Text, CSV and JSON go to `out` or come
/// back as a string; plots need an output directory.
pub fn render(report: &RobustnessReport, format: ReportFormat, out: Option<&Path>) -> Result<Option<String>> {
    let text = match format {
        ReportFormat::Text => to_text(report),
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Json => to_json(report),
        ReportFormat::Plots => {
            let dir = out.ok_or_else(|| HarnessError::Parameter("plots need an output directory (--out)".into()))?;
            write_plots(report, dir)?;
            return Ok(None);
        }
    };
    match out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| HarnessError::io(path, e))?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
