//! `canyon`: run the dual-band measurement pipeline, synthesize channel
//! realizations, fit path-loss models and summarize artifacts.
//!
//! Every command resolves its full configuration first, writes it to
//! `run.json` in the output directory, produces its artifacts with
//! deterministic bytes, and exits 0 on success, 1 on an internal failure
//! and 2 when the inputs are at fault.

mod analyze;
mod config;
mod fit;
mod report;
mod synthesize;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::CliError;

#[derive(Debug, Parser)]
#[command(name = "canyon", version, about = "Dual-band street-canyon channel toolkit")]
pub(crate) struct Cli {
    /// Band selection applied by every command.
    #[arg(long, global = true, value_enum, default_value_t = BandChoice::Both)]
    pub band: BandChoice,

    /// Base seed for every stochastic stage. A `--params` file overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory all artifacts are written to.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// JSON object with parameter overrides for the selected command:
    /// pipeline settings for `analyze`, model constants for `synthesize`.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum BandChoice {
    #[value(name = "154ghz")]
    Lower,
    #[value(name = "300ghz")]
    Upper,
    #[value(name = "both")]
    Both,
}

impl BandChoice {
    pub fn name(self) -> &'static str {
        match self {
            BandChoice::Lower => "154ghz",
            BandChoice::Upper => "300ghz",
            BandChoice::Both => "both",
        }
    }

    /// Whether a grid labeled `label` falls under this selection.
    pub fn accepts(self, label: &str) -> bool {
        match self {
            BandChoice::Both => true,
            _ => label == self.name(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub(crate) enum Command {
    /// Run the measurement pipeline over grid container directories.
    Analyze(analyze::Args),
    /// Generate seeded channel realizations and their statistics.
    Synthesize(synthesize::Args),
    /// Fit close-in and floating-intercept models to a path-loss table.
    Fit(fit::Args),
    /// Summarize the artifacts of a previous analyze run.
    Report(report::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    config::init_thread_pool()?;
    match &cli.command {
        Command::Analyze(args) => analyze::run(cli, args),
        Command::Synthesize(args) => synthesize::run(cli, args),
        Command::Fit(args) => fit::run(cli, args),
        Command::Report(args) => report::run(cli, args),
    }
}
