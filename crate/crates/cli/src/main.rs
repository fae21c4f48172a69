//! `ria`: spectra, simulations, thermodynamics and perturbative oracles of repeated interaction systems.

mod commands;
mod config;
mod error;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::{load_tolerances, read_json, ModelConfig};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ria", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file overriding individual numerical tolerances.
    #[arg(long, global = true)]
    tol_overrides: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum of the reduced map and its ergodicity.
    Spectrum { config: PathBuf },
    /// Asymptotic state and the periodic asymptotic expectation of an observable.
    Asymptotic {
        config: PathBuf,
        #[arg(long)]
        observable: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        per_interval: usize,
    },
    /// Simulate a finite chain and compare with the asymptotic prediction (CSV).
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        chain: usize,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long)]
        observable: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        per_interval: usize,
    },
    /// Energy flux and entropy production in the asymptotic state.
    Thermo { config: PathBuf },
    /// Leading-order perturbative results.
    Oracle { config: PathBuf },
    /// Run consistency checks on a model; exits 4 if any fails.
    Verify {
        config: PathBuf,
        /// Enables a seeded Monte-Carlo cross-check of the spin-fermion rates.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let tol = load_tolerances(cli.tol_overrides.as_deref())?;
    match &cli.command {
        Command::Spectrum { config } => commands::spectrum(&ModelConfig::load(config)?, &tol),
        Command::Asymptotic { config, observable, per_interval } => {
            let obs = observable.as_deref().map(|p| read_json(p, "observable")).transpose()?;
            commands::asymptotic(&ModelConfig::load(config)?, &tol, obs, *per_interval)
        }
        Command::Simulate { config, chain, steps, observable, per_interval } => {
            let obs = observable.as_deref().map(|p| read_json(p, "observable")).transpose()?;
            commands::simulate(&ModelConfig::load(config)?, &tol, *chain, *steps, obs, *per_interval)
        }
        Command::Thermo { config } => commands::thermo(&ModelConfig::load(config)?, &tol),
        Command::Oracle { config } => commands::oracle(&ModelConfig::load(config)?),
        Command::Verify { config, seed } => commands::verify(&ModelConfig::load(config)?, &tol, *seed),
    }
}

fn emit(body: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write output: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|o| emit(&o.body, cli.out.as_ref()).map(|_| o.code));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit()
        }
    }
}
