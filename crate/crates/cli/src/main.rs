//! Batch command-line front end: billiard traces, rotation numbers,
//! periodicity measures, Weyl residual tables, Robin-layer coefficients,
//! reference spectra and boundary-zone remainder integrals.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

/// Numerical billiard dynamics and boundary spectral asymptotics.
#[derive(Parser)]
#[command(name = "billiard-spectra", version, about)]
struct Cli {
    /// Worker threads for the stochastic commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace a billiard orbit to CSV or JSON.
    Trace(commands::TraceArgs),
    /// Tabulate a rotation-number function f(eta).
    Rotation(commands::RotationArgs),
    /// Periodicity measures: 1-D rotation-level measure or the
    /// phase-space near-return measure.
    Periodic(commands::PeriodicArgs),
    /// Two-term Weyl counting residuals against the exact spectrum.
    Weyl(commands::WeylArgs),
    /// Robin boundary-layer surface density and counting coefficient.
    Robin(commands::RobinArgs),
    /// Exact reference spectrum of a disk, rectangle or circular annulus.
    Spectrum(commands::SpectrumArgs),
    /// Monte-Carlo boundary-zone remainder integral.
    Remainder(commands::RemainderArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore failure: the global pool may already exist
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Trace(args) => commands::trace(args),
        Command::Rotation(args) => commands::rotation(args),
        Command::Periodic(args) => commands::periodic(args),
        Command::Weyl(args) => commands::weyl(args),
        Command::Robin(args) => commands::robin(args),
        Command::Spectrum(args) => commands::spectrum(args),
        Command::Remainder(args) => commands::remainder(args),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
