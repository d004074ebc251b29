//! `qrw` command-line harness.
//!
//! Exit status is 0 on success, 1 on a runtime or data error and 2 on a
//! usage error.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

/// Bad invocation: unknown flag, malformed config, missing argument.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "qrw", about = "Query rewriting from session logs", disable_version_flag = true)]
pub struct Cli {
    /// Print the version and the supported file formats.
    #[arg(long)]
    pub version: bool,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a turn log into sessions and label their outcomes.
    Ingest(IngestArgs),
    /// Compress clarification dialogs into single synthetic turns.
    Abridge(AbridgeArgs),
    /// Build a graph snapshot from sessions.
    Train(TrainArgs),
    /// Rank rewrites for a hypothesis, or every source's best rewrite.
    Resolve(ResolveArgs),
    /// Run the closed deployment loop on a canned world.
    Simulate(SimulateArgs),
    /// Score a graph against a labelled evaluation set.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Seconds of silence that end a session.
    #[arg(long)]
    pub max_gap: Option<i64>,
    #[arg(long)]
    pub iq_threshold: Option<f64>,
    /// Interjection lexicon, one entry per line.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AbridgeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `templates/v1` file.
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the DAG store as `dags/v1`.
    #[arg(long)]
    pub dags: Option<PathBuf>,
    #[arg(long)]
    pub language: Option<String>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// baseline, discounting, unrolling or selfaware.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub min_state_support: Option<u64>,
    #[arg(long)]
    pub iq_threshold: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Canonical hypothesis, e.g. `Music|PlayMusicIntent|SongName:team`.
    /// Without it every source's best rewrite is listed.
    #[arg(long)]
    pub hypothesis: Option<String>,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub min_support: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// type1, type2 or benchmark.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub sessions_per_day: Option<usize>,
    /// Required; there is no default seed.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub min_support: Option<u64>,
    #[arg(long)]
    pub min_state_support: Option<u64>,
    #[arg(long)]
    pub iq_threshold: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// `simlog/v1` output.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Directory for the per-day graph snapshots.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// All simulated sessions as `sessions/v1`.
    #[arg(long)]
    pub sessions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub evalset: PathBuf,
    /// Precision-recall points as CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Summary record; defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Runs one invocation and returns its exit status.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                return 2;
            }
            let _ = write!(stdout, "{rendered}");
            return 0;
        }
    };
    match commands::run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                let _ = writeln!(stderr, "run `qrw --help` for usage");
                2
            } else {
                1
            }
        }
    }
}
