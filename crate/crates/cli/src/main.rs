//! `metareduce` command-line front end.
//!
//! Every subcommand validates and computes everything in memory first and
//! only then writes its files, so an error never leaves partial output.
//! Exit status: 0 on success, 1 on bad input, 2 on an internal fault.

mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Opts, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "metareduce", version, about = "Meta-knowledge driven AutoML search-space reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate evaluation records; write normalised records and evaluation counts.
    Ingest(Opts),
    /// Per-dataset rankings, global leaderboard and cross-base correlations.
    Rank(Opts),
    /// Relative-landmarking neighbour of every dataset.
    Similar(Opts),
    /// Skewness, indistinguishability matrices, best groups and random-hit odds.
    Challenge(Opts),
    /// Expected oracle/random/leaderboard/landmarked losses and normalised scores.
    Expect(Opts),
    /// Budgeted simulated search over reduced spaces.
    Simulate(Opts),
    /// Every analysis joined into one summary.json.
    Report(Opts),
    /// Write the planted sample (bases, roster, surface, manifest).
    Synth(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Input,
    Internal,
}

#[derive(Debug)]
pub struct AppError {
    pub kind: Kind,
    pub message: String,
}

impl AppError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { kind: Kind::Input, message: message.into() }
    }

    pub fn internal(err: impl fmt::Display) -> Self {
        Self { kind: Kind::Internal, message: err.to_string() }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<metareduce::Error> for AppError {
    fn from(e: metareduce::Error) -> Self {
        let kind = if e.is_input_error() { Kind::Input } else { Kind::Internal };
        Self { kind, message: e.to_string() }
    }
}

type Handler = fn(&RunConfig) -> Result<output::Outputs, AppError>;

fn run(cli: Cli) -> Result<(), AppError> {
    let (opts, handler): (Opts, Handler) = match cli.command {
        Command::Ingest(o) => (o, commands::ingest),
        Command::Rank(o) => (o, commands::rank),
        Command::Similar(o) => (o, commands::similar),
        Command::Challenge(o) => (o, commands::challenge),
        Command::Expect(o) => (o, commands::expect),
        Command::Simulate(o) => (o, commands::simulate),
        Command::Report(o) => (o, commands::report),
        Command::Synth(o) => (o, commands::synth),
    };
    let cfg = RunConfig::resolve(opts)?;
    let outputs = handler(&cfg)?;
    for name in outputs.names() {
        log::info!("writing {}", cfg.out.join(name).display());
    }
    outputs.commit().map_err(|e| AppError::internal(format!("writing outputs: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message.lines().next().unwrap_or_default());
            ExitCode::from(match e.kind {
                Kind::Input => 1,
                Kind::Internal => 2,
            })
        }
    }
}
