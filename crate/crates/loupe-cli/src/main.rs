//! Pipeline driver: render -> build-data -> filter-hard -> synth-requests ->
//! run-episodes -> score -> simulate -> report.
//!
//! Exit codes are a stable contract: 0 success, 2 configuration or input
//! error, 3 endpoint error.

mod commands;
mod config;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or unreadable/malformed input: exit 2.
    Config(String),
    /// Endpoint unreachable or rejected us: exit 3.
    Endpoint(String),
    /// Anything else: exit 1.
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub fn config_err(message: impl std::fmt::Display) -> CliError {
    CliError::Config(message.to_string())
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "loupe",
    version,
    about = "Visual text compression pipeline: deterministic page rendering, selective-expansion episodes, dataset construction, scoring, and tradeoff simulation"
)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TrueType font file for rendering.
    #[arg(long, global = true)]
    font: Option<PathBuf>,
    /// Rendering preset name (5x, 10x, 15x).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Encoder profile (default, glm).
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Concurrent episodes / classifications.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Turn cap per episode.
    #[arg(long, global = true)]
    turn_cap: Option<u32>,
    /// Expansion payload kind (source-text, ocr-text, image-zoom).
    #[arg(long, global = true)]
    expand_kind: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render documents to page images plus JSON manifests.
    Render {
        /// JSONL of samples ({id, question, answers, document, ...}).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pad samples with distractors, render, and track evidence pages.
    BuildData {
        #[arg(long)]
        input: PathBuf,
        /// Plain-text distractor pool, passages separated by blank lines.
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        target_min: Option<u64>,
        #[arg(long)]
        target_max: Option<u64>,
        /// Skip writing page PNGs (manifests and prepared data only).
        #[arg(long)]
        no_pages: bool,
    },
    /// Classify prepared samples as easy/hard via model + judge endpoints.
    FilterHard {
        /// prepared.jsonl from build-data.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit synthesis prompt bundles for hard samples.
    SynthRequests {
        #[arg(long)]
        input: PathBuf,
        /// classified.jsonl from filter-hard; without it all samples are
        /// treated as hard.
        #[arg(long)]
        classified: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run selective-expansion episodes and score them.
    RunEpisodes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only run the first N samples.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Judge existing trajectories and build result tables.
    Score {
        #[arg(long)]
        trajectories: PathBuf,
        /// prepared.jsonl matching the trajectories.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Judge budget-exhausted episodes on their last turn's
        /// post-reasoning text.
        #[arg(long)]
        force_extract: bool,
    },
    /// Closed-form benefit sweep over a compression-regime curve.
    Simulate {
        /// CSV with columns rate,no_tool_error,selection.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Inline single-point alternative to --curve.
        #[arg(long)]
        p_hit: Option<f64>,
        #[arg(long)]
        err_hit: Option<f64>,
        #[arg(long)]
        err_miss: Option<f64>,
        #[arg(long)]
        d_no: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verify each row empirically with this many Monte-Carlo trials.
        #[arg(long)]
        mc_trials: Option<u64>,
    },
    /// Token-ledger report over a trajectories file.
    Report {
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let settings = config::Settings::load(&cli)?;
    match &cli.command {
        Command::Render { input, out } => commands::render::run(&settings, input, out),
        Command::BuildData {
            input,
            pool,
            out,
            target_min,
            target_max,
            no_pages,
        } => commands::build_data::run(
            &settings,
            input,
            pool,
            out,
            *target_min,
            *target_max,
            *no_pages,
        ),
        Command::FilterHard { input, out } => commands::filter_hard::run(&settings, input, out),
        Command::SynthRequests {
            input,
            classified,
            out,
        } => commands::synth_requests::run(&settings, input, classified.as_deref(), out),
        Command::RunEpisodes { input, out, limit } => {
            commands::run_episodes::run(&settings, input, out, *limit)
        }
        Command::Score {
            trajectories,
            input,
            out,
            force_extract,
        } => commands::score::run(&settings, trajectories, input, out, *force_extract),
        Command::Simulate {
            curve,
            p_hit,
            err_hit,
            err_miss,
            d_no,
            out,
            mc_trials,
        } => commands::simulate::run(
            &settings,
            curve.as_deref(),
            *p_hit,
            *err_hit,
            *err_miss,
            *d_no,
            out.as_deref(),
            *mc_trials,
        ),
        Command::Report { trajectories, csv } => {
            commands::report::run(&settings, trajectories, csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Endpoint(message)) => {
            eprintln!("endpoint error: {message}");
            ExitCode::from(3)
        }
        Err(CliError::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
