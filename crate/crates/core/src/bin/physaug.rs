use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use physaug::metrics::{DatasetMode, ReportOptions};
use physaug::pipeline::{run_augment, run_metrics, run_preview, run_synthesize_corpus, RunSummary};
use physaug::{Error, Mode, PipelineConfig};

const EXIT_FATAL: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "physaug", version, about = "Physics-based image augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML config; all fields default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// physaug, npm1, npm2, fog or lowlight.
    #[arg(long)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Augment every image under --input into --output.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples_per_image: Option<usize>,
    },
    /// Write a contact sheet of augmentations of one image (--input) to --output.
    Preview {
        #[command(flatten)]
        common: Common,
        /// Grid size as ROWSxCOLS.
        #[arg(long, default_value = "3x3", value_parser = parse_grid)]
        grid: (usize, usize),
    },
    /// Compute mPC from a corruption,severity,map CSV.
    Metrics {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "custom", value_parser = parse_dataset)]
        dataset: DatasetMode,
        /// Clean-domain mAP to include in the report.
        #[arg(long)]
        clean: Option<f64>,
        /// Published mPC to compare against.
        #[arg(long)]
        reference_mpc: Option<f64>,
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        format: String,
    },
    /// Write fog and low-light severity ladders for a clean corpus.
    Synthesize {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in {s:?}"))?;
    if r == 0 || c == 0 {
        return Err("grid must be at least 1x1".into());
    }
    Ok((r, c))
}

fn parse_dataset(s: &str) -> Result<DatasetMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(common: &Common) -> Result<PipelineConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.global_seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(m) = common.mode {
        cfg.mode = m;
    }
    if common.input.is_some() {
        cfg.input_dir = common.input.clone();
    }
    if common.output.is_some() {
        cfg.output_dir = common.output.clone();
    }
    Ok(cfg)
}

fn summarize(verb: &str, s: &RunSummary) -> ExitCode {
    println!(
        "{verb}: {} inputs, {} written, {} failed in {:.2?}",
        s.inputs,
        s.written,
        s.failures.len(),
        s.elapsed
    );
    for f in &s.failures {
        println!("  failed {}: {}", f.path.display(), f.reason);
    }
    if s.has_failures() {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Error> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("{flag} is required")))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Augment {
            common,
            samples_per_image,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = samples_per_image {
                cfg.samples_per_image = n;
            }
            let summary = run_augment(&cfg)?;
            Ok(summarize("augment", &summary))
        }
        Command::Preview { common, grid } => {
            let cfg = load_config(&common)?;
            let image = required(&common.input, "--input")?;
            let output = required(&common.output, "--output")?;
            let sheet = run_preview(&cfg, image, grid.0, grid.1)?;
            physaug::pipeline::save_png(&sheet, output)?;
            println!("preview: wrote {}", output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics {
            results,
            dataset,
            clean,
            reference_mpc,
            format,
        } => {
            let report = run_metrics(
                &results,
                dataset,
                ReportOptions {
                    clean_score: clean,
                    reference_mpc,
                },
            )?;
            if format == "json" {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Synthesize { common } => {
            let cfg = load_config(&common)?;
            let input = required(&cfg.input_dir, "--input")?.to_path_buf();
            let output = required(&cfg.output_dir, "--output")?.to_path_buf();
            let summary = run_synthesize_corpus(&cfg, &input, &output)?;
            Ok(summarize("synthesize", &summary))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PHYSAUG_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
