//! `adsde`: batch experiment runner for the adiabatic SDE laboratory.
//!
//! Subcommands: `verify` (lemma/property audits), `tunneling` (Monte Carlo
//! tunneling statistics), `expansion` (coefficients and per-path
//! evaluation), `convergence` (epsilon-sweep slope fits), `selftest`
//! (synthetic calibrations). Every run emits CSV data files plus one
//! `audits.json` summary; the exit code is 0 iff all enabled audits pass.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "adsde", version, about = "adiabatic SDE laboratory runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (INI-style); defaults apply if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 = all cores. Results are identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Comma-separated epsilon list (overrides the config).
    #[arg(long, global = true)]
    epsilons: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run all lemma/property audits (isometry, moment/tail bounds,
    /// semigroup, contraction, Duhamel, conversion).
    Verify,
    /// Monte Carlo tunneling sampling plus ensemble statistics audits.
    Tunneling,
    /// Expansion coefficients and per-path evaluation.
    Expansion,
    /// Epsilon-sweep convergence slopes.
    Convergence,
    /// Synthetic calibration battery; independent of the model config.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(CliError::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Some(eps) = &cli.epsilons {
        cfg.epsilons = config::parse_epsilons(eps)?;
    }
    cfg.validate()?;

    if cfg.workers > 0 {
        // Results are independent of the worker count by construction
        // (per-path streams, path-ordered reductions).
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(commands::run_err)?;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;

    let summary = match cli.command {
        Command::Verify => commands::verify::run(&cfg)?,
        Command::Tunneling => commands::tunneling::run(&cfg)?,
        Command::Expansion => commands::expansion::run(&cfg)?,
        Command::Convergence => commands::convergence::run(&cfg)?,
        Command::Selftest => commands::selftest::run(&cfg)?,
    };
    summary.write_json(&cfg.out_dir)?;
    summary.print();
    Ok(summary.all_pass)
}
