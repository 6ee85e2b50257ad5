//! `autothink` — train the surrogate reasoning policy through the
//! three-stage schedule, run hyperparameter sweeps, analyze reasoning
//! transcripts, evaluate reward test vectors, and run randomized oracle
//! checks.

// `!(x > 0.0)`-style validation is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or usage: exit 2.
    Config(String),
    /// Training diverged: exit 3.
    Diverged(String),
    /// No usable transcript lines: exit 4.
    AllMalformed(String),
    /// An oracle found a violation: exit 5.
    OracleFailure(String),
    /// Anything else: exit 1.
    Other(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Diverged(m) => write!(f, "diverged: {m}"),
            CliError::AllMalformed(m) => write!(f, "no usable input: {m}"),
            CliError::OracleFailure(m) => write!(f, "oracle failure: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::AllMalformed(_) => 4,
            CliError::OracleFailure(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "autothink",
    version,
    about = "Adaptive-reasoning training laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the staged training schedule from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the pipeline over a hyperparameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze reasoning transcripts (JSONL file or directory of files).
    Analyze {
        #[arg(long)]
        transcripts: PathBuf,
        /// Standard and no-thinking baseline summaries for E-F1.
        #[arg(long)]
        baselines: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// No-think threshold: max tokens left in the think span after
        /// stripping whitespace and dots.
        #[arg(long, default_value_t = 0)]
        tau: usize,
        /// Number of difficulty levels.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        /// Difficulty binning on pass rates: equal-width bins or
        /// near-equal problem counts per level.
        #[arg(long, value_enum, default_value_t = BinningArg::EqualWidth)]
        binning: BinningArg,
        /// Keyword lexicon JSON; defaults to the shipped lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Evaluate reward test vectors from a JSON file.
    RewardEval {
        #[arg(long)]
        vectors: PathBuf,
    },
    /// Run randomized brute-force oracles against the implementation.
    OracleCheck {
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deliberately corrupt one computation to prove the oracle bites.
        #[arg(long, value_enum, default_value_t = Fault::None)]
        inject_fault: Fault,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BinningArg {
    EqualWidth,
    Quantile,
}

impl From<BinningArg> for autothink_core::analytics::Binning {
    fn from(b: BinningArg) -> Self {
        match b {
            BinningArg::EqualWidth => Self::EqualWidth,
            BinningArg::Quantile => Self::Quantile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    None,
    /// Skip mean-centering in the advantage computation under test.
    AdvantageMean,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AUTOTHINK_LOG_LEVEL", "warn"))
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, out, seed } => commands::train::run(&config, out, seed),
        Command::Sweep {
            config,
            grid,
            out,
            seed,
        } => commands::sweep::run(&config, &grid, out, seed),
        Command::Analyze {
            transcripts,
            baselines,
            out,
            tau,
            levels,
            binning,
            lexicon,
        } => commands::analyze::run(
            &transcripts,
            baselines.as_deref(),
            &out,
            tau,
            levels,
            binning.into(),
            lexicon.as_deref(),
        ),
        Command::RewardEval { vectors } => commands::reward_eval::run(&vectors),
        Command::OracleCheck {
            count,
            seed,
            inject_fault,
        } => commands::oracle_check::run(count as usize, seed, inject_fault),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
