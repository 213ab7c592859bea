mod artifact;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

/// Quantum linear response on a simulated register.
#[derive(Debug, Parser)]
#[command(name = "qlrlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbital-optimized VQE ground state.
    GroundState(Overrides),
    /// Excitation energies and oscillator strengths from a ground-state artifact.
    Qlr(Overrides),
    /// Repeated shot-sampled qLR runs and their per-state spread.
    Campaign(Overrides),
    /// Condition numbers, element spreads and CVs of a qLR artifact.
    Metrics(Overrides),
    /// Broadened absorption spectrum of a qLR artifact.
    Spectrum(Overrides),
    /// Build and export a read-out confusion matrix.
    MitigateBuild(Overrides),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (o, cmd) = match &cli.command {
        Command::GroundState(o)
        | Command::Qlr(o)
        | Command::Campaign(o)
        | Command::Metrics(o)
        | Command::Spectrum(o)
        | Command::MitigateBuild(o) => (o, &cli.command),
    };
    let cfg = RunConfig::resolve(o)?;
    cfg.validate()?;
    let written = match cmd {
        Command::GroundState(_) => commands::ground_state(cfg)?,
        Command::Qlr(_) => commands::qlr(cfg)?,
        Command::Campaign(_) => commands::campaign(cfg, o.threads)?,
        Command::Metrics(_) => commands::metrics(cfg)?,
        Command::Spectrum(_) => commands::spectrum_cmd(cfg)?,
        Command::MitigateBuild(_) => commands::mitigate_build(cfg)?,
    };
    println!("wrote {}", written.path.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
