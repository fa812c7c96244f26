//! Ensemble statistics over tunneling samples: exponential-law audits by
//! moments and by empirical-CDF distance, independence across levels, and
//! log-log convergence-rate regressions.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{fromf, mean_stderr, pairwise_sum, Scalar};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("insufficient samples: {got} < {required}")]
    InsufficientSamples { got: usize, required: usize },
    #[error("convergence fit needs at least 4 strictly positive points")]
    NonPositiveData,
}

/// Asymptotic 1%-level factor for the empirical-CDF sup-distance threshold
/// `1.63 / sqrt(N)`.
pub const CDF_DISTANCE_FACTOR: f64 = 1.63;

/// Result of the exponential-law audit for one level.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentialAudit {
    pub n_samples: usize,
    /// Sample mean and its standard error.
    pub mean: f64,
    pub mean_stderr: f64,
    /// Theory mean the sample mean is held against.
    pub mu_theory: f64,
    pub mean_consistent: bool,
    /// `m_n / (n! mu^n)` for n = 2, 3 with standard errors.
    pub moment_ratios: Vec<MomentRatio>,
    /// Sup distance between the empirical CDF and `Exp(mean)`.
    pub cdf_distance: f64,
    pub cdf_threshold: f64,
    pub cdf_pass: bool,
    /// Set when the sample has no variance to fit (all-zero samples).
    pub insufficient_variance: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRatio {
    pub order: u32,
    pub ratio: f64,
    pub stderr: f64,
    pub consistent: bool,
}

/// Audit that nonnegative samples follow an exponential law with mean
/// `mu_theory`.
///
/// Checks the sample mean against `mu_theory` at 3 sigma, the raw moment
/// ratios `m_n / (n! mean^n)` for n = 2, 3 against 1 at 3 sigma (standard
/// errors from the sample variance of `T^n`), and the empirical-CDF sup
/// distance against `Exp(mean)` at the 1.63/sqrt(N) threshold.
pub fn exponential_audit<T: Scalar>(
    samples: &[T],
    mu_theory: T,
) -> Result<ExponentialAudit, StatsError> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(StatsError::InsufficientSamples {
            got: samples.len(),
            required: MIN_SAMPLES,
        });
    }
    let xs: Vec<f64> = samples
        .iter()
        .map(|x| x.to_f64().unwrap_or(f64::NAN))
        .collect();
    let n = xs.len();
    let (mean, mean_se) = mean_stderr(&xs);
    let mu_th = mu_theory.to_f64().unwrap_or(f64::NAN);

    if mean == 0.0 || mean_se == 0.0 {
        return Ok(ExponentialAudit {
            n_samples: n,
            mean,
            mean_stderr: mean_se,
            mu_theory: mu_th,
            mean_consistent: false,
            moment_ratios: Vec::new(),
            cdf_distance: f64::NAN,
            cdf_threshold: CDF_DISTANCE_FACTOR / (n as f64).sqrt(),
            cdf_pass: false,
            insufficient_variance: true,
            pass: false,
        });
    }

    let mean_consistent = (mean - mu_th).abs() <= 3.0 * mean_se;

    // Moment ratios m_k / (k! mean^k), k = 2, 3. Standard errors from the
    // sample variance of T^k; the mean-estimate correlation is ignored,
    // which is the documented convention here.
    let mut moment_ratios = Vec::new();
    let mut factorial = 1.0;
    for k in 2..=3u32 {
        factorial *= k as f64;
        let powers: Vec<f64> = xs.iter().map(|&x| x.powi(k as i32)).collect();
        let (mk, mk_se) = mean_stderr(&powers);
        let denom = factorial * mean.powi(k as i32);
        let ratio = mk / denom;
        let stderr = mk_se / denom;
        moment_ratios.push(MomentRatio {
            order: k,
            ratio,
            stderr,
            consistent: (ratio - 1.0).abs() <= 3.0 * stderr,
        });
    }

    let cdf_distance = exponential_cdf_distance(&xs, mean);
    let cdf_threshold = CDF_DISTANCE_FACTOR / (n as f64).sqrt();
    let cdf_pass = cdf_distance < cdf_threshold;
    let pass = mean_consistent && cdf_pass && moment_ratios.iter().all(|r| r.consistent);

    Ok(ExponentialAudit {
        n_samples: n,
        mean,
        mean_stderr: mean_se,
        mu_theory: mu_th,
        mean_consistent,
        moment_ratios,
        cdf_distance,
        cdf_threshold,
        cdf_pass,
        insufficient_variance: false,
        pass,
    })
}

/// Sup distance between the empirical CDF of `xs` and `Exp(mu)`.
pub fn exponential_cdf_distance(xs: &[f64], mu: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = 1.0 - (-x / mu).exp();
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        sup = sup.max((f - lo).abs()).max((hi - f).abs());
    }
    sup
}

/// Result of the independence audit between two levels.
#[derive(Debug, Clone, Serialize)]
pub struct IndependenceAudit {
    pub n_samples: usize,
    /// Pearson correlation with its null standard error `1/sqrt(N)`.
    pub correlation: f64,
    pub correlation_stderr: f64,
    /// `E[T_k T_l] / (E[T_k] E[T_l])` with a delta-method standard error.
    pub product_moment_ratio: f64,
    pub ratio_stderr: f64,
    pub pass: bool,
}

/// Audit that paired samples are uncorrelated and product moments factorize.
pub fn independence_audit<T: Scalar>(
    xs: &[T],
    ys: &[T],
) -> Result<IndependenceAudit, StatsError> {
    const MIN_SAMPLES: usize = 1000;
    if xs.len() < MIN_SAMPLES || xs.len() != ys.len() {
        return Err(StatsError::InsufficientSamples {
            got: xs.len().min(ys.len()),
            required: MIN_SAMPLES,
        });
    }
    let a: Vec<f64> = xs.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let b: Vec<f64> = ys.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let n = a.len() as f64;
    let (ma, _) = mean_stderr(&a);
    let (mb, _) = mean_stderr(&b);
    let prods: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| x * y).collect();
    let (mab, _) = mean_stderr(&prods);

    let var_a = central_moment2(&a, ma);
    let var_b = central_moment2(&b, mb);
    let cov = cross_cov(&a, ma, &b, mb);
    let correlation = cov / (var_a * var_b).sqrt();
    let correlation_stderr = 1.0 / n.sqrt();

    let ratio = mab / (ma * mb);
    // Delta method on (m_ab, m_a, m_b) with sample (co)variances.
    let var_mab = central_moment2(&prods, mab);
    let cov_ab_a = cross_cov(&prods, mab, &a, ma);
    let cov_ab_b = cross_cov(&prods, mab, &b, mb);
    let var_ratio = (ratio * ratio / n)
        * (var_mab / (mab * mab) + var_a / (ma * ma) + var_b / (mb * mb)
            - 2.0 * cov_ab_a / (mab * ma)
            - 2.0 * cov_ab_b / (mab * mb)
            + 2.0 * cov / (ma * mb));
    let ratio_stderr = var_ratio.max(0.0).sqrt();

    let pass = correlation.abs() <= 3.0 * correlation_stderr
        && (ratio - 1.0).abs() <= 3.0 * ratio_stderr;
    Ok(IndependenceAudit {
        n_samples: a.len(),
        correlation,
        correlation_stderr,
        product_moment_ratio: ratio,
        ratio_stderr,
        pass,
    })
}

fn central_moment2(xs: &[f64], mean: f64) -> f64 {
    let terms: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    pairwise_sum(&terms) / (xs.len() as f64 - 1.0)
}

fn cross_cov(xs: &[f64], mx: f64, ys: &[f64], my: f64) -> f64 {
    let terms: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x - mx) * (y - my))
        .collect();
    pairwise_sum(&terms) / (xs.len() as f64 - 1.0)
}

/// Weighted least-squares fit of `log y = intercept + slope * log x`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Log-log regression for convergence orders.
///
/// `y_stderr` entries weight the points (propagated into log space as
/// `sigma/y`); pass zeros for an unweighted fit.
pub fn convergence_fit<T: Scalar>(
    x: &[T],
    y: &[T],
    y_stderr: &[T],
) -> Result<SlopeFit, StatsError> {
    if x.len() < 4 || x.len() != y.len() || y.len() != y_stderr.len() {
        return Err(StatsError::NonPositiveData);
    }
    let to64 = |v: &T| v.to_f64().unwrap_or(f64::NAN);
    let mut lx = Vec::with_capacity(x.len());
    let mut ly = Vec::with_capacity(x.len());
    let mut w = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let (xi, yi, si) = (to64(&x[i]), to64(&y[i]), to64(&y_stderr[i]));
        if !(xi > 0.0) || !(yi > 0.0) || !si.is_finite() {
            return Err(StatsError::NonPositiveData);
        }
        lx.push(xi.ln());
        ly.push(yi.ln());
        // log-space sigma = sigma_y / y; floor keeps exact synthetic data
        // from producing infinite weights.
        let sigma_log = (si / yi).max(1e-12);
        w.push(1.0 / (sigma_log * sigma_log));
    }
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(&lx).map(|(wi, xi)| wi * xi).sum();
    let swy: f64 = w.iter().zip(&ly).map(|(wi, yi)| wi * yi).sum();
    let xbar = swx / sw;
    let ybar = swy / sw;
    let sxx: f64 = w
        .iter()
        .zip(&lx)
        .map(|(wi, xi)| wi * (xi - xbar) * (xi - xbar))
        .sum();
    let sxy: f64 = w
        .iter()
        .zip(lx.iter().zip(&ly))
        .map(|(wi, (xi, yi))| wi * (xi - xbar) * (yi - ybar))
        .sum();
    if sxx == 0.0 {
        return Err(StatsError::NonPositiveData);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    Ok(SlopeFit {
        slope,
        intercept,
        slope_stderr: (1.0 / sxx).sqrt(),
    })
}

/// Deterministic exponential sampler for calibration tests and the self
/// test battery.
pub fn synthetic_exponential<T: Scalar>(mu: T, n: usize, seed: u64) -> Vec<T> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            mu * fromf::<T>(-(1.0 - u).ln())
        })
        .collect()
}
