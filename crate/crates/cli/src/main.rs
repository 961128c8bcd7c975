use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Certainty-factor monitor for exercise-induced respiratory conditions.
#[derive(Debug, Parser)]
#[command(name = "cfmon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Knowledge-base utilities.
    Kb {
        #[command(subcommand)]
        action: KbAction,
    },
    /// Append the valid rows of an event file to an event log.
    Ingest {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Generate a synthetic event file from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the reasoning loop over a day of events.
    Infer(InferArgs),
    /// Write the daily chart-data files.
    Summarize {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        date: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "hourly")]
        buckets: String,
    },
    /// Render a saved inference report as text.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum KbAction {
    /// Load and validate a knowledge-base document.
    Validate { path: PathBuf },
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Knowledge base; the bundled one when omitted.
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    events: PathBuf,
    #[arg(long, conflicts_with = "all_dates", required_unless_present = "all_dates")]
    date: Option<String>,
    /// Infer every date in the event file; `--out` is then a directory.
    #[arg(long)]
    all_dates: bool,
    /// Start of an inclusive time range (HH:MM:SS).
    #[arg(long, requires = "to")]
    from: Option<String>,
    #[arg(long, requires = "from")]
    to: Option<String>,
    #[arg(long)]
    thresholds: Option<PathBuf>,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = cfmon_core::engine::DEFAULT_ALERT_THRESHOLD)]
    alert_threshold: f64,
    /// JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-run whenever the event file grows.
    #[arg(long, conflicts_with = "all_dates")]
    watch: bool,
    #[arg(long, default_value_t = 5)]
    interval_secs: u64,
    /// Stop watching after this many runs.
    #[arg(long)]
    max_runs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
