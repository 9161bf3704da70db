//! Batch subcommands: segment, eval, thickness-map and phantom.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use choroidseg_core::phantom::PhantomSpec;
use choroidseg_core::pipeline::{
    evaluate_result, thickness_map, write_thickness_csv, ThicknessMapFiles,
};
use choroidseg_core::scan_io::{
    load_labels, load_scan, render_overlay, save_labels, save_scan, GREEN,
};
use choroidseg_core::{segment, ErrorReport, PipelineConfig, SegmentationResult};
use rayon::prelude::*;

const SCAN_EXTENSIONS: [&str; 3] = ["png", "pgm", "pnm"];

/// Expands directories into the scans they contain, sorted by name.
/// Plain paths are kept as given so that missing files surface as
/// per-file failures.
pub fn collect_inputs(inputs: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut scans = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && has_scan_extension(p))
                .collect();
            found.sort();
            scans.extend(found);
        } else {
            scans.push(input.clone());
        }
    }
    Ok(scans)
}

fn has_scan_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SCAN_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Files written for one scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOutputs {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct BatchReport {
    pub written: Vec<(PathBuf, ScanOutputs)>,
    pub failed: Vec<(PathBuf, String)>,
}

pub struct SegmentJob<'a> {
    pub config: &'a PipelineConfig,
    pub out_dir: &'a Path,
    pub overlay: bool,
    pub resolution_um: Option<f64>,
}

/// Segments every scan, in parallel, writing `<stem>.json` and
/// `<stem>.thickness.csv` (plus `<stem>.overlay.png`) into the output
/// directory. One failing scan does not stop the others.
pub fn segment_batch(scans: &[PathBuf], job: &SegmentJob) -> BatchReport {
    let outcomes: Vec<_> = scans
        .par_iter()
        .map(|scan| (scan.clone(), segment_one(scan, job)))
        .collect();
    let mut report = BatchReport::default();
    for (scan, outcome) in outcomes {
        match outcome {
            Ok(outputs) => report.written.push((scan, outputs)),
            Err(e) => report.failed.push((scan, format!("{e:#}"))),
        }
    }
    report
}

fn segment_one(scan: &Path, job: &SegmentJob) -> anyhow::Result<ScanOutputs> {
    let image = load_scan(scan, job.resolution_um)?;
    let result = segment(&image, job.config)?;
    let stem = scan
        .file_stem()
        .and_then(|s| s.to_str())
        .context("scan path has no file name")?;
    let outputs = ScanOutputs {
        json: job.out_dir.join(format!("{stem}.json")),
        csv: job.out_dir.join(format!("{stem}.thickness.csv")),
        overlay: job
            .overlay
            .then(|| job.out_dir.join(format!("{stem}.overlay.png"))),
    };
    result.save(&outputs.json)?;
    write_thickness_csv(&result.thickness, &outputs.csv)?;
    if let Some(path) = &outputs.overlay {
        render_overlay(
            &image,
            &[(&result.rpe, GREEN), (&result.choroid, GREEN)],
            None,
            path,
        )?;
    }
    Ok(outputs)
}

/// Mean unsigned error of a stored result against every labelled layer.
pub fn evaluate_files(result: &Path, labels: &Path) -> anyhow::Result<Vec<ErrorReport>> {
    let result = SegmentationResult::load(result)
        .with_context(|| format!("cannot load result {}", result.display()))?;
    let labels = load_labels(labels)?;
    if labels.is_empty() {
        anyhow::bail!("label file holds no points");
    }
    labels
        .sets()
        .map(|set| evaluate_result(&result, set).map_err(Into::into))
        .collect()
}

pub fn write_eval_text(reports: &[ErrorReport], out: &mut impl Write) -> std::io::Result<()> {
    for r in reports {
        writeln!(
            out,
            "{}: {:.2} px, {:.8} mm mean unsigned error over {} points",
            r.layer, r.mean_unsigned_px, r.mean_unsigned_mm, r.n_points
        )?;
    }
    Ok(())
}

pub fn thickness_map_files(results: &[PathBuf], out: &Path) -> anyhow::Result<ThicknessMapFiles> {
    let volume = results
        .iter()
        .map(|p| {
            SegmentationResult::load(p)
                .with_context(|| format!("cannot load result {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(thickness_map(&volume, out)?)
}

/// Writes `phantom_<seed>.png` and `phantom_<seed>.labels.csv`.
pub fn write_phantom(
    seed: u64,
    vessels: Option<usize>,
    label_step: usize,
    out_dir: &Path,
) -> anyhow::Result<(PathBuf, PathBuf)> {
    let mut spec = PhantomSpec::randomized(seed);
    if let Some(n) = vessels {
        spec.vessels = n;
    }
    let phantom = spec.generate()?;
    let scan = out_dir.join(format!("phantom_{seed}.png"));
    let labels = out_dir.join(format!("phantom_{seed}.labels.csv"));
    save_scan(&phantom.image, &scan)?;
    save_labels(&phantom.labels(label_step), &labels)?;
    Ok((scan, labels))
}
