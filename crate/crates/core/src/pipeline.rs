//! File-level batch operations behind the CLI.
//!
//! Work is split into independent `(image, sample)` tasks run on a rayon
//! pool of `workers` threads. Each task derives its seed from the global seed
//! and the image's path relative to the input root, so output bytes do not
//! depend on scheduling. Per-file failures are collected, not fatal.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use image::{ImageFormat, RgbImage};
use log::{debug, info, warn};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::metrics::{parse_results, report, DatasetMode, Report, ReportOptions};
use crate::perturbation::{synthesize_fog, synthesize_illumination, FogParams, RetinexParams, ScalarField};
use crate::seed::{derive_sample_seed, ItemKey, SeedSpec};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// Path relative to the input root.
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub inputs: usize,
    pub written: usize,
    /// One entry per failing input file, sorted by path.
    pub failures: Vec<Failure>,
    pub elapsed: Duration,
    /// Sum of per-task wall time across workers.
    pub task_time: Duration,
}

impl RunSummary {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Image files under `root`, relative to it, in sorted order.
pub fn discover_images(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let is_image = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false);
        if is_image {
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walkdir yields paths under root")
                .to_path_buf();
            found.push(rel);
        }
    }
    Ok(found)
}

pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ImageTensor::from_rgb8(&img.to_rgb8()))
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// `<dir>/<stem>__<mode>__s<k>.png`, keeping the input's relative directory.
pub fn augmented_name(rel: &Path, mode: &str, sample: usize) -> PathBuf {
    let stem = rel.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    rel.with_file_name(format!("{stem}__{mode}__s{sample}.png"))
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".physaug-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

/// Discovers inputs and prepares `output`, excluding `output` from the
/// inputs when it is nested under `input`.
fn discover_inputs(input: &Path, output: &Path) -> Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", input.display())));
    }
    prepare_output(output)?;
    let mut images = discover_images(input)?;
    if let (Ok(i), Ok(o)) = (input.canonicalize(), output.canonicalize()) {
        if let Ok(nested) = o.strip_prefix(&i) {
            images.retain(|p| !p.starts_with(nested));
        }
    }
    if images.is_empty() {
        return Err(Error::Config(format!(
            "no PNG or JPEG images under {}",
            input.display()
        )));
    }
    Ok(images)
}

fn require_dir<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("{what} is not set")))
}

/// Outcome of one task: `Ok` on write, `Err((input, reason))` otherwise.
type TaskResult = std::result::Result<(), (PathBuf, String)>;

fn collect(inputs: usize, results: Vec<TaskResult>, task_time: Duration, start: Instant) -> RunSummary {
    let mut failures: BTreeMap<PathBuf, String> = BTreeMap::new();
    let mut written = 0;
    for r in results {
        match r {
            Ok(()) => written += 1,
            Err((path, reason)) => {
                failures.entry(path).or_insert(reason);
            }
        }
    }
    RunSummary {
        inputs,
        written,
        failures: failures
            .into_iter()
            .map(|(path, reason)| Failure { path, reason })
            .collect(),
        elapsed: start.elapsed(),
        task_time,
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

/// Writes `samples_per_image` augmented copies of every input image.
pub fn run_augment(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let input = require_dir(&cfg.input_dir, "input_dir")?;
    let output = require_dir(&cfg.output_dir, "output_dir")?;
    let images = discover_inputs(input, output)?;
    info!(
        "augmenting {} images x {} samples with {} ({} workers)",
        images.len(),
        cfg.samples_per_image,
        cfg.mode,
        cfg.workers
    );

    let tasks: Vec<(&PathBuf, usize)> = images
        .iter()
        .flat_map(|rel| (0..cfg.samples_per_image).map(move |k| (rel, k)))
        .collect();
    let pool = build_pool(cfg.workers)?;
    let results: Vec<(TaskResult, Duration)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(rel, k)| {
                timed(|| {
                    augment_one(cfg, input, output, rel, k)
                        .map_err(|e| (rel.clone(), e.to_string()))
                })
            })
            .collect()
    });
    let task_time = results.iter().map(|(_, d)| *d).sum();
    let summary = collect(
        images.len(),
        results.into_iter().map(|(r, _)| r).collect(),
        task_time,
        start,
    );
    for f in &summary.failures {
        warn!("skipped {}: {}", f.path.display(), f.reason);
    }
    Ok(summary)
}

fn augment_one(cfg: &PipelineConfig, input: &Path, output: &Path, rel: &Path, k: usize) -> Result<()> {
    let img = load_image(&input.join(rel))?;
    let spec = SeedSpec {
        global_seed: cfg.global_seed,
        item_key: ItemKey::from_relative_path(rel)?,
    };
    let seed = derive_sample_seed(&spec, k as u64)?;
    let out = cfg.apply(&img, seed)?;
    let dest = output.join(augmented_name(rel, cfg.mode.name(), k));
    debug!("{} -> {}", rel.display(), dest.display());
    save_png(&out.to_rgb8()?, &dest)
}

/// Tiles `rows x cols` augmentations of one image into a contact sheet.
///
/// Cell 0 (top-left) is the input; cell `t > 0` uses sample index `t - 1`
/// keyed by the image's file name, i.e. the same seed `augment` uses for
/// that file at the corpus root.
pub fn run_preview(cfg: &PipelineConfig, image_path: &Path, rows: usize, cols: usize) -> Result<RgbImage> {
    cfg.validate()?;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    let img = load_image(image_path)?;
    let name = image_path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", image_path.display())))?;
    let spec = SeedSpec {
        global_seed: cfg.global_seed,
        item_key: ItemKey::from_relative_path(Path::new(name))?,
    };
    let (h, w) = (img.height() as u32, img.width() as u32);
    let pool = build_pool(cfg.workers)?;
    let tiles: Vec<RgbImage> = pool.install(|| {
        (0..rows * cols)
            .into_par_iter()
            .map(|t| {
                if t == 0 {
                    return img.to_rgb8();
                }
                let seed = derive_sample_seed(&spec, (t - 1) as u64)?;
                cfg.apply(&img, seed)?.to_rgb8()
            })
            .collect::<Result<_>>()
    })?;
    let mut sheet = RgbImage::new(w * cols as u32, h * rows as u32);
    for (t, tile) in tiles.iter().enumerate() {
        let (r, c) = ((t / cols) as i64, (t % cols) as i64);
        image::imageops::replace(&mut sheet, tile, c * i64::from(w), r * i64::from(h));
    }
    Ok(sheet)
}

/// Reads a results CSV, checks its shape against `mode`, and builds a report.
pub fn run_metrics(results_path: &Path, mode: DatasetMode, opts: ReportOptions) -> Result<Report> {
    let text = fs::read_to_string(results_path).map_err(|e| Error::io(results_path, e))?;
    let table = parse_results(&text)?;
    table.check_mode(mode)?;
    Ok(report(&table, opts))
}

/// Names of the corruptions emitted by [`run_synthesize_corpus`].
pub const SYNTH_FOG: &str = "fog";
pub const SYNTH_LOWLIGHT: &str = "lowlight";

/// Writes fog and low-light versions of every clean image at each severity
/// to `<out_dir>/<corruption>/<severity>/<relative path>.png`.
pub fn run_synthesize_corpus(cfg: &PipelineConfig, clean_dir: &Path, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    if same_path(clean_dir, out_dir) {
        return Err(Error::Config("output directory must differ from the clean corpus".into()));
    }
    let images = discover_inputs(clean_dir, out_dir)?;

    let s = &cfg.synthesize;
    let pool = build_pool(cfg.workers)?;
    let results: Vec<(Vec<TaskResult>, Duration)> = pool.install(|| {
        images
            .par_iter()
            .map(|rel| {
                timed(|| {
                    let img = match load_image(&clean_dir.join(rel)) {
                        Ok(img) => img,
                        Err(e) => return vec![Err((rel.clone(), e.to_string()))],
                    };
                    let mut out = Vec::new();
                    for (level, &t) in s.fog_transmission.iter().enumerate() {
                        let p = FogParams {
                            transmission: ScalarField::Uniform(t),
                            atmospheric_light: s.atmospheric_light,
                        };
                        out.push(write_variant(out_dir, SYNTH_FOG, level + 1, rel, || synthesize_fog(&img, &p)));
                    }
                    for (level, &l) in s.lowlight_illumination.iter().enumerate() {
                        let p = RetinexParams {
                            illumination: ScalarField::Uniform(l),
                        };
                        out.push(write_variant(out_dir, SYNTH_LOWLIGHT, level + 1, rel, || {
                            synthesize_illumination(&img, &p)
                        }));
                    }
                    out
                })
            })
            .collect()
    });
    let task_time = results.iter().map(|(_, d)| *d).sum();
    let flat = results.into_iter().flat_map(|(r, _)| r).collect();
    Ok(collect(images.len(), flat, task_time, start))
}

fn write_variant(
    out_dir: &Path,
    corruption: &str,
    severity: usize,
    rel: &Path,
    f: impl FnOnce() -> Result<ImageTensor>,
) -> TaskResult {
    let run = || -> Result<()> {
        let dest = out_dir
            .join(corruption)
            .join(severity.to_string())
            .join(rel)
            .with_extension("png");
        save_png(&f()?.to_rgb8()?, &dest)
    };
    run().map_err(|e| (rel.to_path_buf(), e.to_string()))
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}
