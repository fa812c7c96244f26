//! `convergence`: epsilon sweeps with common random numbers — remainder
//! slopes per truncation order, the backward-to-forward conversion slope,
//! and the cross-scheme consistency slope.

use adiabatic_sde::dephasing::build_frame;
use adiabatic_sde::expansion::{remainder_scaling, RemainderGrid};
use adiabatic_sde::scalar::mean_stderr;
use adiabatic_sde::sde::{propagate_forward, Scheme, SchemeConfig};
use adiabatic_sde::stats::convergence_fit;
use adiabatic_sde::stochastic::BrownianPath;

use super::{dyadic_steps, run_err, CliError};
use crate::config::ExperimentConfig;
use crate::report::{AuditOutcome, Csv, CsvField, Summary};

/// Grid growth exponent for the remainder study: `dt ~ eps^3` keeps every
/// discretization artifact at or above the `eps^{3/2}` remainder slope.
const REMAINDER_GRID_POWER: f64 = 3.0;

/// Paths per epsilon for the scheme-consistency slope.
const SCHEME_GAP_PATHS: u64 = 32;

pub fn run(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    if cfg.epsilons.len() < 4 {
        return Err(CliError::Run(
            "convergence needs at least 4 epsilons in descending order".into(),
        ));
    }
    for w in cfg.epsilons.windows(2) {
        if w[1] >= w[0] {
            return Err(CliError::Run("epsilons must be strictly descending".into()));
        }
    }
    let model = cfg.build_model()?;
    let l1 = model.l1_family();
    let l2 = model.l2_family();
    let scheme_cfg = cfg.scheme_config();
    let order = cfg.expansion_order.max(1);
    let mut outcomes = Vec::new();
    let mut csv = Csv::new(&["kind", "epsilon", "value", "stderr"]);

    // Remainder scaling on dyadically refined cubic grids.
    let base_m = cfg.steps_for(cfg.epsilons[0]).next_power_of_two();
    let steps = dyadic_steps(&cfg.epsilons, base_m, REMAINDER_GRID_POWER);
    let grids: Vec<RemainderGrid<f64>> = cfg
        .epsilons
        .iter()
        .zip(&steps)
        .map(|(&eps, &steps)| RemainderGrid { eps, steps })
        .collect();
    let frame = build_frame(&model, 64, cfg.gap_tol).map_err(run_err)?;
    let a0 = frame.vector(0, 0).clone();
    let study = remainder_scaling(
        &l1,
        &l2,
        &a0,
        &grids,
        order,
        cfg.n_paths,
        cfg.seed,
        cfg.gap_tol,
        &scheme_cfg,
    )
    .map_err(run_err)?;
    for n in 0..=order as usize {
        for (k, &eps) in study.eps.iter().enumerate() {
            csv.row(&[
                CsvField::Str(&format!("remainder{n}")),
                CsvField::Float(eps),
                CsvField::Float(study.mean_delta[n][k]),
                CsvField::Float(study.stderr[n][k]),
            ]);
        }
        let expected = n as f64 + 0.5;
        let slope = study.slopes[n].slope;
        outcomes.push(
            AuditOutcome::new(
                &format!("remainder_slope_order{n}"),
                slope,
                study.slopes[n].slope_stderr,
                0.2,
                (slope - expected).abs() <= 0.2,
            )
            .with_level(format!("expected={expected}")),
        );
    }

    // Conversion slope, shared with `verify`.
    let (conv_slope, conv_stderr, conv_rows) =
        super::verify::conversion_slope(cfg, &model, &scheme_cfg)?;
    for r in conv_rows {
        if r.audit_name == "conversion_discrepancy" {
            csv.row(&[
                CsvField::Str("conversion"),
                CsvField::Float(r.n_or_gamma),
                CsvField::Float(r.lhs),
                CsvField::Float(r.stderr),
            ]);
        }
    }
    outcomes.push(AuditOutcome::new(
        "conversion_slope",
        conv_slope,
        conv_stderr,
        0.2,
        (conv_slope - 0.5).abs() <= 0.2,
    ));

    // Scheme consistency: |U_em(1,0) - U_exp(1,0)| = O(sqrt(dt)) on common
    // paths, refined across the dt ladder of the epsilon list.
    let em_cfg = SchemeConfig {
        scheme: Scheme::EulerMaruyama,
        ..scheme_cfg
    };
    let gap_steps = dyadic_steps(&cfg.epsilons, cfg.steps_for(cfg.epsilons[0]), 1.0);
    let eps_fixed = cfg.epsilons[0];
    let mut dts = Vec::new();
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for (k, &m) in gap_steps.iter().enumerate() {
        let doublings = (m / gap_steps[0]).trailing_zeros();
        let mut vals = Vec::new();
        for p in 0..SCHEME_GAP_PATHS {
            let path = BrownianPath::sample(gap_steps[0], cfg.seed, 300 + p)
                .refine_times(doublings);
            let a = propagate_forward(&l1, &l2, eps_fixed, &path, &scheme_cfg).map_err(run_err)?;
            let b = propagate_forward(&l1, &l2, eps_fixed, &path, &em_cfg).map_err(run_err)?;
            vals.push((a.terminal() - b.terminal()).frobenius_norm());
        }
        let (mean, se) = mean_stderr(&vals);
        let dt = 1.0 / m as f64;
        csv.row(&[
            CsvField::Str("scheme_gap"),
            CsvField::Float(dt),
            CsvField::Float(mean),
            CsvField::Float(se),
        ]);
        dts.push(dt);
        means.push(mean);
        ses.push(se);
        let _ = k;
    }
    let fit = convergence_fit(&dts, &means, &ses).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "scheme_consistency_slope",
        fit.slope,
        fit.slope_stderr,
        0.15,
        (fit.slope - 0.5).abs() <= 0.15,
    ));

    csv.write(&cfg.out_dir.join("convergence.csv"))?;
    Ok(Summary::new("convergence", outcomes))
}
