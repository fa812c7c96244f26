//! `selftest`: calibration battery on synthetic data — independent of the
//! configured model.

use adiabatic_sde::stats::{
    convergence_fit, exponential_audit, independence_audit, synthetic_exponential,
};
use adiabatic_sde::stochastic::BrownianPath;

use super::{run_err, CliError};
use crate::config::ExperimentConfig;
use crate::report::{AuditOutcome, Summary};

pub fn run(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let mut outcomes = Vec::new();
    let seed = cfg.seed;

    // Exponential audit accepts synthetic exponential data.
    let samples = synthetic_exponential::<f64>(1.0, 10_000, seed);
    let audit = exponential_audit(&samples, 1.0).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "selftest_exponential_accepts",
        audit.cdf_distance,
        0.0,
        audit.cdf_threshold,
        audit.pass,
    ));

    // ... and rejects uniform data (derived from the exponential sampler
    // through the probability integral transform).
    let uniform: Vec<f64> = synthetic_exponential::<f64>(1.0, 5000, seed ^ 0xdead)
        .into_iter()
        .map(|x| 1.0 - (-x).exp())
        .collect();
    let audit = exponential_audit(&uniform, 0.5).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "selftest_exponential_rejects_uniform",
        audit.cdf_distance,
        0.0,
        audit.cdf_threshold,
        !audit.cdf_pass,
    ));

    // Independence audit accepts independent exponentials and flags
    // identical samples.
    let xs = synthetic_exponential::<f64>(1.0, 4000, seed ^ 1);
    let ys = synthetic_exponential::<f64>(0.5, 4000, seed ^ 2);
    let ind = independence_audit(&xs, &ys).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "selftest_independence_accepts",
        ind.correlation,
        ind.correlation_stderr,
        3.0 * ind.correlation_stderr,
        ind.pass,
    ));
    let ind_bad = independence_audit(&xs, &xs).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "selftest_independence_rejects_identical",
        ind_bad.correlation,
        ind_bad.correlation_stderr,
        3.0 * ind_bad.correlation_stderr,
        !ind_bad.pass,
    ));

    // Convergence fit recovers exact and noisy synthetic slopes.
    let x = [0.1f64, 0.05, 0.025, 0.0125];
    let y: Vec<f64> = x.iter().map(|e| 1.7 * e.powf(1.5)).collect();
    let fit = convergence_fit(&x, &y, &[0.0; 4]).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "selftest_fit_exact_slope",
        fit.slope,
        fit.slope_stderr,
        1e-9,
        (fit.slope - 1.5).abs() <= 1e-9,
    ));
    let jitter: Vec<f64> = synthetic_exponential::<f64>(1.0, 4, seed ^ 3)
        .into_iter()
        .map(|v| 1.0 - (-v).exp() - 0.5)
        .collect();
    let noisy: Vec<f64> = x
        .iter()
        .zip(&jitter)
        .map(|(e, j)| 0.8 * e.powf(0.5) * (1.0 + 0.05 * j))
        .collect();
    let se: Vec<f64> = noisy.iter().map(|v| 0.02 * v).collect();
    let fit = convergence_fit(&x, &noisy, &se).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "selftest_fit_noisy_slope",
        fit.slope,
        fit.slope_stderr,
        0.15,
        (fit.slope - 0.5).abs() <= 0.15,
    ));

    // Counter-based stream reproducibility.
    let a = BrownianPath::<f64>::sample(256, seed, 9);
    let b = BrownianPath::<f64>::sample(256, seed, 9);
    let identical = a.values() == b.values();
    outcomes.push(AuditOutcome::new(
        "selftest_rng_reproducible",
        if identical { 0.0 } else { 1.0 },
        0.0,
        0.0,
        identical,
    ));
    // ... and streams are distinct.
    let c = BrownianPath::<f64>::sample(256, seed, 10);
    let distinct = a.values() != c.values();
    outcomes.push(AuditOutcome::new(
        "selftest_rng_streams_distinct",
        if distinct { 1.0 } else { 0.0 },
        0.0,
        1.0,
        distinct,
    ));

    Ok(Summary::new("selftest", outcomes))
}
