use std::path::PathBuf;
use std::process::ExitCode;

use acoustic_miner_cli::{cmd_bench, cmd_index, cmd_run, cmd_validate, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acoustic-miner", version, about = "Block-parallel acoustic event detection over sound archives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory of recordings and write an archive map.
    Index {
        root: PathBuf,
        /// Glob matched against file names.
        #[arg(long, default_value = "*")]
        pattern: String,
        /// `filename:<format>`, `cadence:<start_epoch_s>:<interval_s>` or `sidecar`.
        #[arg(long)]
        timestamps: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a run's parm-file against the archive without reading audio.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Detect events and write a selection table plus a run report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Repeat a run for each worker count and tabulate ERT and rate.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        workers: Vec<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::parse().command {
        Command::Index { root, pattern, timestamps, out } => cmd_index(&root, &pattern, &timestamps, &out),
        Command::Validate { config, overrides } => cmd_validate(&config, &overrides),
        Command::Run { config, workers, overrides } => cmd_run(&config, workers, &overrides),
        Command::Bench { config, workers, overrides } => cmd_bench(&config, &workers, &overrides),
    };
    ExitCode::from(code as u8)
}
