//! `bisecr`: simulate, fit and check paired-detector capture-recapture data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod settings;

use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "bisecr", version, about = "Bayesian SECR for paired detectors with partial identities")]
struct Cli {
    /// TOML config file with any of the settings below; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Simulate a data set and write traps, captures, sexes and truth CSVs
    Simulate,
    /// Fit the model and write posterior samples and a summary
    Fit,
    /// Refit data simulated at a summary's estimates and report interval coverage
    Backsim,
    /// Rasterise posterior activity centres into expected counts per pixel
    Density,
    /// Flag identifiability problems in a data set and, optionally, a fit
    Probe,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = match &cli.config {
        Some(path) => Settings::from_file(path)?.overlay(&cli.settings)?,
        None => cli.settings,
    };
    match cli.command {
        Command::Simulate => commands::simulate(settings),
        Command::Fit => commands::fit(settings),
        Command::Backsim => commands::backsim(settings),
        Command::Density => commands::density(settings),
        Command::Probe => commands::probe(settings),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
