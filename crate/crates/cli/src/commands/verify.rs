//! `verify`: run the lemma and property audits on the configured model —
//! Ito isometry, moment and tail bounds, semigroup re-association,
//! contraction, the Duhamel identity with a refinement slope, and the
//! backward-to-forward conversion with an epsilon slope.

use num_complex::Complex;

use adiabatic_sde::linalg::CVector;
use adiabatic_sde::scalar::mean_stderr;
use adiabatic_sde::sde::{
    backward_to_forward, contraction_audit, duhamel_audit, propagate_forward, semigroup_audit,
    Scheme, SchemeConfig,
};
use adiabatic_sde::stats::convergence_fit;
use adiabatic_sde::stochastic::{
    isometry_audit, moment_bound_audit, tail_bound_audit, Adaptation, AuditRow, BrownianPath,
    GridProcess,
};

use super::{dyadic_steps, run_err, CliError};
use crate::config::ExperimentConfig;
use crate::report::{AuditOutcome, Csv, CsvField, Summary};

/// Path count for the isometry / moment / tail battery (criterion scale).
const BATTERY_PATHS: usize = 10_000;
/// Grid for the battery integrands.
const BATTERY_STEPS: usize = 512;
/// Duhamel audit parameters.
const DUHAMEL_EPS: f64 = 0.1;
const DUHAMEL_STEPS: usize = 20_000;
/// Paths averaged per point of the conversion and Duhamel slopes.
const SLOPE_PATHS: u64 = 48;

type C = Complex<f64>;

pub fn run(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let model = cfg.build_model()?;
    let l1 = model.l1_family();
    let l2 = model.l2_family();
    let scheme_cfg = cfg.scheme_config();
    let mut outcomes = Vec::new();
    let mut rows: Vec<AuditRow> = Vec::new();

    // Ito isometry battery: the criterion gate is |ratio - 1| <= 3/sqrt(N).
    let gate = 3.0 / (BATTERY_PATHS as f64).sqrt();
    let batteries: [(&str, Box<dyn Fn(&BrownianPath<f64>) -> GridProcess<f64, C> + Sync>); 3] = [
        (
            "isometry_constant",
            Box::new(|p| GridProcess::new(vec![C::new(1.0, 0.0); p.steps() + 1], Adaptation::Forward)),
        ),
        (
            "isometry_linear_time",
            Box::new(|p| GridProcess::deterministic(p.steps(), |s| C::new(s, 0.0))),
        ),
        (
            "isometry_brownian",
            Box::new(|p| {
                GridProcess::new(
                    p.values().iter().map(|&b| C::new(b, 0.0)).collect(),
                    Adaptation::Forward,
                )
            }),
        ),
    ];
    for (name, sampler) in &batteries {
        let audit = isometry_audit(sampler, BATTERY_STEPS, BATTERY_PATHS, cfg.seed);
        rows.push(audit.to_row(name));
        let estimate = audit.isometry_ratio;
        outcomes.push(AuditOutcome::new(
            name,
            estimate,
            audit.ratio_stderr,
            gate,
            (estimate - 1.0).abs() <= gate,
        ));
        outcomes.push(AuditOutcome::new(
            &format!("{name}_mean"),
            audit.mean_err,
            audit.mean_stderr,
            3.0 * audit.mean_stderr.max(1e-12),
            audit.mean_err <= 3.0 * audit.mean_stderr.max(1e-12),
        ));
    }

    // Moment bounds n in {1, 2, 3} for the constant and Brownian integrands.
    for (iname, sampler) in &batteries[..2] {
        let _ = iname;
        let _ = sampler;
    }
    for n in 1..=3u32 {
        for (iname, sampler) in [(&batteries[0].0, &batteries[0].1), (&batteries[2].0, &batteries[2].1)] {
            let audit = moment_bound_audit(sampler, n, BATTERY_STEPS, BATTERY_PATHS, cfg.seed);
            let short = iname.trim_start_matches("isometry_");
            let name = format!("moment_bound_n{n}_{short}");
            rows.push(audit.to_row(&name));
            outcomes.push(AuditOutcome::new(
                &name,
                audit.lhs_estimate,
                audit.lhs_stderr,
                audit.rhs_bound,
                audit.satisfied,
            ));
        }
    }

    // Tail bounds for the sup-bounded constant integrand.
    let tail = tail_bound_audit(
        &batteries[0].1,
        Some(1.0),
        &[1.0, 2.0, 4.0, 8.0],
        BATTERY_STEPS,
        BATTERY_PATHS,
        cfg.seed,
    )
    .map_err(run_err)?;
    for row in &tail {
        let name = format!("tail_bound_gamma{}", row.gamma);
        rows.push(row.to_row(&name));
        outcomes.push(AuditOutcome::new(
            &name,
            row.empirical_prob,
            row.empirical_stderr,
            row.bound,
            row.satisfied,
        ));
    }

    // Semigroup re-association at the leading epsilon.
    let eps0 = cfg.epsilons[0];
    let m0 = cfg.steps_for(eps0);
    let path0 = BrownianPath::sample(m0, cfg.seed, 0);
    let traj = propagate_forward(&l1, &l2, eps0, &path0, &scheme_cfg).map_err(run_err)?;
    let semi = semigroup_audit(&traj, m0 / 2, &l1, &l2, &path0).map_err(run_err)?;
    rows.push(AuditRow {
        audit_name: "semigroup".into(),
        n_or_gamma: 0.5,
        lhs: semi,
        rhs: 1e-12,
        stderr: 0.0,
        satisfied: semi <= 1e-12,
    });
    outcomes.push(AuditOutcome::new("semigroup", semi, 0.0, 1e-12, semi <= 1e-12));

    // Contraction: the exponential scheme stays within 1e-9 of unit norm on
    // dephasing models; Euler-Maruyama within the growth slack.
    let con = contraction_audit(&traj, &l1, &l2, &scheme_cfg).map_err(run_err)?;
    let exp_dev = (con.max_norm - 1.0).abs();
    outcomes.push(AuditOutcome::new(
        "contraction_exponential",
        con.max_norm,
        0.0,
        1.0 + 1e-9,
        exp_dev <= 1e-9,
    ));
    rows.push(AuditRow {
        audit_name: "contraction_exponential".into(),
        n_or_gamma: f64::NAN,
        lhs: con.max_norm,
        rhs: 1.0 + 1e-9,
        stderr: 0.0,
        satisfied: exp_dev <= 1e-9,
    });
    let em_cfg = SchemeConfig {
        scheme: Scheme::EulerMaruyama,
        ..scheme_cfg
    };
    let traj_em = propagate_forward(&l1, &l2, eps0, &path0, &em_cfg).map_err(run_err)?;
    let con_em = contraction_audit(&traj_em, &l1, &l2, &em_cfg).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "contraction_euler_maruyama",
        con_em.max_norm,
        0.0,
        con_em.threshold,
        !con_em.violated,
    ));
    rows.push(AuditRow {
        audit_name: "contraction_euler_maruyama".into(),
        n_or_gamma: f64::NAN,
        lhs: con_em.max_norm,
        rhs: con_em.threshold,
        stderr: 0.0,
        satisfied: !con_em.violated,
    });

    // Duhamel residual at (eps, M) = (0.1, 2e4) plus a refinement slope.
    let residual_path = BrownianPath::sample(DUHAMEL_STEPS, cfg.seed, 1);
    let residual =
        duhamel_audit(&l1, &l2, DUHAMEL_EPS, &residual_path, &scheme_cfg).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "duhamel_residual",
        residual,
        0.0,
        0.05,
        residual < 0.05,
    ));
    rows.push(AuditRow {
        audit_name: "duhamel_residual".into(),
        n_or_gamma: DUHAMEL_EPS,
        lhs: residual,
        rhs: 0.05,
        stderr: 0.0,
        satisfied: residual < 0.05,
    });

    let levels = 4u32;
    let base_m = DUHAMEL_STEPS / 8;
    let mut dts = Vec::new();
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    for level in 0..levels {
        let mut vals = Vec::new();
        for p in 0..SLOPE_PATHS {
            let path = BrownianPath::sample(base_m, cfg.seed, 100 + p).refine_times(level);
            vals.push(duhamel_audit(&l1, &l2, DUHAMEL_EPS, &path, &scheme_cfg).map_err(run_err)?);
        }
        let (mean, se) = mean_stderr(&vals);
        dts.push(1.0 / (base_m as f64 * 2f64.powi(level as i32)));
        means.push(mean);
        stderrs.push(se);
    }
    let fit = convergence_fit(&dts, &means, &stderrs).map_err(run_err)?;
    outcomes.push(AuditOutcome::new(
        "duhamel_refinement_slope",
        fit.slope,
        fit.slope_stderr,
        0.4,
        fit.slope >= 0.4,
    ));
    rows.push(AuditRow {
        audit_name: "duhamel_refinement_slope".into(),
        n_or_gamma: f64::NAN,
        lhs: fit.slope,
        rhs: 0.4,
        stderr: fit.slope_stderr,
        satisfied: fit.slope >= 0.4,
    });

    // Backward-to-forward conversion: per-path discrepancy slope vs eps.
    let (conv_slope, conv_stderr, conv_rows) =
        conversion_slope(cfg, &model, &scheme_cfg).map_err(run_err)?;
    rows.extend(conv_rows);
    outcomes.push(AuditOutcome::new(
        "conversion_slope",
        conv_slope,
        conv_stderr,
        0.2,
        (conv_slope - 0.5).abs() <= 0.2,
    ));

    let mut csv = Csv::new(&["audit_name", "n_or_gamma", "lhs", "rhs", "stderr", "satisfied"]);
    for r in &rows {
        csv.row(&[
            CsvField::Str(&r.audit_name),
            CsvField::Float(r.n_or_gamma),
            CsvField::Float(r.lhs),
            CsvField::Float(r.rhs),
            CsvField::Float(r.stderr),
            CsvField::Bool(r.satisfied),
        ]);
    }
    csv.write(&cfg.out_dir.join("verify_audits.csv"))?;

    Ok(Summary::new("verify", outcomes))
}

/// Mean conversion discrepancy per epsilon and its log-log slope, on
/// common random numbers through dyadic refinement.
pub(crate) fn conversion_slope(
    cfg: &ExperimentConfig,
    model: &adiabatic_sde::dephasing::DephasingModel<f64>,
    scheme_cfg: &SchemeConfig,
) -> Result<(f64, f64, Vec<AuditRow>), CliError> {
    let epsilons: Vec<f64> = if cfg.epsilons.len() >= 4 {
        cfg.epsilons.clone()
    } else {
        vec![0.1, 0.05, 0.025, 0.0125]
    };
    let l1 = model.l1_family();
    let l2 = model.l2_family();
    let base_m = cfg.steps_for(epsilons[0]);
    let steps = dyadic_steps(&epsilons, base_m, 1.0);
    // Deterministic test function with components in both levels.
    let f = |s: f64| CVector::new(vec![C::new(0.4 + 0.3 * s, 0.0), C::new(0.6, -0.2 * s)]);
    let dim = model.dim();
    let f_any = move |s: f64| {
        CVector::from_fn(dim, |i| {
            if i < 2 {
                f(s)[i]
            } else {
                C::new(0.2, 0.1 * s)
            }
        })
    };

    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    let mut rows = Vec::new();
    for (k, (&eps, &m)) in epsilons.iter().zip(&steps).enumerate() {
        let doublings = (m / base_m).trailing_zeros();
        let mut vals = Vec::new();
        for p in 0..SLOPE_PATHS {
            let path = BrownianPath::sample(base_m, cfg.seed, 200 + p).refine_times(doublings);
            let grid = GridProcess::deterministic(m, f_any);
            let audit = backward_to_forward(&grid, &l1, &l2, eps, &path, scheme_cfg)
                .map_err(run_err)?;
            vals.push(audit.discrepancy);
        }
        let (mean, se) = mean_stderr(&vals);
        rows.push(AuditRow {
            audit_name: "conversion_discrepancy".into(),
            n_or_gamma: eps,
            lhs: mean,
            rhs: f64::NAN,
            stderr: se,
            satisfied: true,
        });
        means.push(mean);
        stderrs.push(se);
        let _ = k;
    }
    let fit = convergence_fit(&epsilons, &means, &stderrs).map_err(run_err)?;
    rows.push(AuditRow {
        audit_name: "conversion_slope".into(),
        n_or_gamma: f64::NAN,
        lhs: fit.slope,
        rhs: 0.5,
        stderr: fit.slope_stderr,
        satisfied: (fit.slope - 0.5).abs() <= 0.2,
    });
    Ok((fit.slope, fit.slope_stderr, rows))
}
