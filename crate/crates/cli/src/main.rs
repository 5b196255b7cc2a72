use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lineseg_cli::gen::GenOptions;
use lineseg_cli::segment::SegmentOptions;
use lineseg_cli::{gen, load_config, score, segment};

#[derive(Parser)]
#[command(name = "lineseg", version, about = "Text line segmentation of handwritten page images")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_kv)]
    overrides: Vec<(String, String)>,
}

#[derive(Subcommand)]
enum Command {
    /// Segment page images into line label rasters and JSON.
    Segment {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Skip skew estimation and rotation.
        #[arg(long)]
        no_deskew: bool,
        /// Also write a colour overlay per page.
        #[arg(long)]
        overlay: bool,
        /// Also write the per-assignment debug trace per page.
        #[arg(long)]
        trace: bool,
        /// Pages processed in parallel (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Also print the per-page report as JSON.
        #[arg(long)]
        json: bool,
        /// Image files or directories of images.
        inputs: Vec<PathBuf>,
    },
    /// Score label rasters against ground truth.
    Score {
        #[command(flatten)]
        config: ConfigArgs,
        /// Match acceptance level (defaults to the config's match_threshold).
        #[arg(long)]
        threshold: Option<f64>,
        /// Write the full report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
        results: PathBuf,
        gt: PathBuf,
    },
    /// Generate synthetic pages with ground truth.
    Gen {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        min_lines: usize,
        #[arg(long, default_value_t = 8)]
        max_lines: usize,
        /// Largest skew in degrees; pages cycle through ±this.
        #[arg(long, default_value_t = 10.0)]
        skew: f64,
        /// Blank space between lines, in x-heights; sets the line pitch.
        #[arg(long, default_value_t = 2.0)]
        line_gap: f64,
        /// Fraction of pages (0..=1) where one word pair of adjacent lines touches.
        #[arg(long, default_value_t = 0.0)]
        touching: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> lineseg::Result<ExitCode> {
    match command {
        Command::Segment { config, out, no_deskew, overlay, trace, workers, json, inputs } => {
            let mut cfg = load_config(config.config.as_deref(), &config.overrides)?;
            if no_deskew {
                cfg.deskew = false;
            }
            let inputs = segment::expand_inputs(&inputs)?;
            let report = segment::run(&cfg, &inputs, &out, &SegmentOptions { overlay, trace, workers })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
            Ok(if report.failures() > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Score { config, threshold, json, results, gt } => {
            let cfg = load_config(config.config.as_deref(), &config.overrides)?;
            let threshold = threshold.unwrap_or(cfg.match_threshold);
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(lineseg::Error::Config(format!("threshold must lie in (0, 1], got {threshold}")));
            }
            let report = score::run(&results, &gt, threshold)?;
            if let Some(path) = json {
                lineseg::io::save_json(&path, &report)?;
            }
            print!("{}", report.to_text());
            Ok(if report.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Gen { out, count, min_lines, max_lines, skew, line_gap, touching, seed } => {
            if min_lines == 0 || max_lines < min_lines {
                return Err(lineseg::Error::Config("need 1 <= min-lines <= max-lines".into()));
            }
            if !(0.0..=1.0).contains(&touching) || line_gap.is_nan() || line_gap < 0.0 {
                return Err(lineseg::Error::Config("need touching in [0, 1] and line-gap >= 0".into()));
            }
            let opts = GenOptions {
                count,
                min_lines,
                max_lines,
                max_skew_deg: skew,
                line_gap,
                touching,
                seed,
                ..GenOptions::default()
            };
            let pages = gen::run(&out, &opts)?;
            println!("wrote {} pages to {}", pages.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
