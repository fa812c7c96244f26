//! `tunneling`: Monte Carlo sampling of per-level tunneling with the
//! ensemble statistics audits — mean against quadrature, exponential law,
//! independence across levels, norm preservation and frame completeness.

use adiabatic_sde::dephasing::tunneling_ensemble;
use adiabatic_sde::stats::{exponential_audit, independence_audit};

use super::{run_err, CliError};
use crate::config::ExperimentConfig;
use crate::report::{AuditOutcome, Csv, CsvField, Summary};

/// Stream range stride between epsilon batches.
pub const EPS_STREAM_STRIDE: u64 = 1 << 32;

pub fn run(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let model = cfg.build_model()?;
    let scheme_cfg = cfg.scheme_config();
    let mut outcomes = Vec::new();

    for (eps_idx, &eps) in cfg.epsilons.iter().enumerate() {
        let m = cfg.steps_for(eps);
        let (frame, coefficients, samples) = tunneling_ensemble(
            &model,
            eps,
            m,
            cfg.n_paths,
            cfg.seed,
            eps_idx as u64 * EPS_STREAM_STRIDE,
            cfg.gap_tol,
            &scheme_cfg,
        )
        .map_err(run_err)?;
        let d = frame.dim();
        let eps_label = format!("{eps}");

        // Sample stream: one row per (path, level).
        let mut csv = Csv::new(&[
            "path_id", "epsilon", "k", "T_sim", "T_pred", "A_k_re", "A_k_im",
        ]);
        for s in &samples {
            for k in 1..d {
                csv.row(&[
                    CsvField::Uint(s.path_id),
                    CsvField::Float(eps),
                    CsvField::Uint(k as u64),
                    CsvField::Float(s.t_sim[k - 1]),
                    CsvField::Float(s.t_pred[k - 1]),
                    CsvField::Float(s.amplitudes[k - 1].re),
                    CsvField::Float(s.amplitudes[k - 1].im),
                ]);
            }
        }
        csv.write(&cfg.out_dir.join(format!("samples_{eps_label}.csv")))?;

        // Norm preservation and frame completeness across the ensemble.
        let max_drift = samples.iter().map(|s| s.norm_drift).fold(0.0, f64::max);
        outcomes.push(
            AuditOutcome::new("norm_preservation", max_drift, 0.0, 1e-9, max_drift <= 1e-9)
                .with_level(format!("eps={eps_label}")),
        );
        let max_defect = samples
            .iter()
            .map(|s| s.completeness_defect)
            .fold(0.0, f64::max);
        outcomes.push(
            AuditOutcome::new("frame_completeness", max_defect, 0.0, 1e-9, max_defect <= 1e-9)
                .with_level(format!("eps={eps_label}")),
        );

        // Exponential-law audits per excited level on the scaled samples;
        // skipped below the audit's sample floor.
        for k in 1..d {
            if cfg.n_paths < 100 {
                eprintln!("note: {} paths < 100, skipping exponential audits", cfg.n_paths);
                break;
            }
            let scaled: Vec<f64> = samples.iter().map(|s| s.t_sim[k - 1] / eps).collect();
            let mu_theory = coefficients.mean_tunneling(k, frame.dt());
            let audit = exponential_audit(&scaled, mu_theory).map_err(run_err)?;
            let lvl = format!("eps={eps_label},k={k}");
            outcomes.push(
                AuditOutcome::new(
                    "tunneling_mean",
                    audit.mean,
                    audit.mean_stderr,
                    mu_theory,
                    audit.mean_consistent,
                )
                .with_level(lvl.clone()),
            );
            outcomes.push(
                AuditOutcome::new(
                    "exponential_cdf_distance",
                    audit.cdf_distance,
                    0.0,
                    audit.cdf_threshold,
                    audit.cdf_pass,
                )
                .with_level(lvl.clone()),
            );
            for r in &audit.moment_ratios {
                outcomes.push(
                    AuditOutcome::new(
                        &format!("moment_ratio_m{}", r.order),
                        r.ratio,
                        r.stderr,
                        3.0 * r.stderr,
                        r.consistent,
                    )
                    .with_level(lvl.clone()),
                );
            }
        }

        // Independence across level pairs (d >= 3); skipped below the
        // audit's sample floor.
        if d > 2 && cfg.n_paths < 1000 {
            eprintln!("note: {} paths < 1000, skipping independence audits", cfg.n_paths);
        }
        for ka in 1..d {
            if cfg.n_paths < 1000 {
                break;
            }
            for kb in (ka + 1)..d {
                let xs: Vec<f64> = samples.iter().map(|s| s.t_sim[ka - 1]).collect();
                let ys: Vec<f64> = samples.iter().map(|s| s.t_sim[kb - 1]).collect();
                let audit = independence_audit(&xs, &ys).map_err(run_err)?;
                let lvl = format!("eps={eps_label},k={ka},l={kb}");
                outcomes.push(
                    AuditOutcome::new(
                        "independence_correlation",
                        audit.correlation,
                        audit.correlation_stderr,
                        0.05,
                        audit.correlation.abs() < 0.05,
                    )
                    .with_level(lvl.clone()),
                );
                outcomes.push(
                    AuditOutcome::new(
                        "product_moment_ratio",
                        audit.product_moment_ratio,
                        audit.ratio_stderr,
                        3.0 * audit.ratio_stderr,
                        (audit.product_moment_ratio - 1.0).abs() <= 3.0 * audit.ratio_stderr,
                    )
                    .with_level(lvl),
                );
            }
        }
    }

    Ok(Summary::new("tunneling", outcomes))
}
