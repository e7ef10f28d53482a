//! `finemotion`: operator-facing pipeline driver.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 transport failure,
//! 3 every input dropped.

mod ops;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "finemotion", version, about = "Fine-grained text-to-motion pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON file with default option values (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed; every random choice in the command derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic desk corpus (motions + step-marked texts).
    Synth {
        #[command(flatten)]
        common: Common,
        /// Comma-separated family list.
        #[arg(long)]
        families: Option<String>,
        #[arg(long)]
        per_family: Option<usize>,
    },
    /// Expand coarse descriptions into validated stepeed texts.
    Expand {
        #[command(flatten)]
        common: Common,
        /// JSONL of {source_id, coarse[, motion_file]}.
        #[arg(long)]
        inputs: PathBuf,
        /// Prompt template id (P1..P8).
        #[arg(long)]
        template: Option<String>,
        /// Directory of offline fixture responses.
        #[arg(long)]
        offline_fixtures: Option<PathBuf>,
        #[arg(long)]
        retries: Option<u32>,
        #[arg(long)]
        concurrency: Option<usize>,
        #[arg(long)]
        requests_per_minute: Option<u32>,
    },
    /// Pair expansion output with motions; optionally add mirrored twins.
    Build {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expansion: PathBuf,
        #[arg(long)]
        motion_root: PathBuf,
        #[arg(long)]
        mirror: bool,
    },
    /// Corpus statistics (and audit tallies when --audits is given).
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        /// JSONL of audit records to tally.
        #[arg(long)]
        audits: Option<PathBuf>,
    },
    /// Train the diffusion model or the contrastive evaluator.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        /// diffusion | evaluator
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        variant: Option<String>,
        /// Repeatable ablation switch.
        #[arg(long = "ablation")]
        ablations: Vec<String>,
        /// tiny | desk
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        split_seed: Option<u64>,
    },
    /// Draw a motion from a trained checkpoint.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        coarse: String,
        /// Step-marked fine text (inline).
        #[arg(long)]
        fine: Option<String>,
        /// File holding the step-marked fine text.
        #[arg(long)]
        fine_file: Option<PathBuf>,
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Evaluate a checkpoint with FID / R-precision / Diversity.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        eval_checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        split_seed: Option<u64>,
    },
    /// Train+eval the base config and all seven ablation variants.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        split_seed: Option<u64>,
        /// Steps for the shared evaluator training.
        #[arg(long)]
        eval_steps: Option<usize>,
    },
    /// Render a motion file to PNG frames or an animated GIF.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        motion: PathBuf,
        /// png_frames | animated
        #[arg(long)]
        format: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; --help/--version print and exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match ops::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
