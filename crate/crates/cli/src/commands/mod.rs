pub mod convergence;
pub mod expansion;
pub mod selftest;
pub mod tunneling;
pub mod verify;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

/// Steps per epsilon for a dyadic refinement chain: the base count comes
/// from the grid constraint at the largest epsilon, later entries grow by
/// powers of two at least as fast as the requested growth of `(eps0/eps)^p`.
pub fn dyadic_steps(epsilons: &[f64], base_m: usize, power: f64) -> Vec<usize> {
    let eps0 = epsilons[0];
    epsilons
        .iter()
        .map(|&e| {
            let growth = (eps0 / e).powf(power);
            let doublings = growth.log2().ceil().max(0.0) as u32;
            base_m << doublings
        })
        .collect()
}
