use adiabatic_sde::dephasing::{tunneling_ensemble, DephasingModel};
use adiabatic_sde::sde::SchemeConfig;
use adiabatic_sde::stats::{exponential_audit, independence_audit};

fn main() {
    let cfg = SchemeConfig::default();
    let eps = 0.05;
    let m = 4000;
    let mu = std::f64::consts::PI.powi(2) / 20.0;
    let d2 = DephasingModel::<f64>::rotating(1.0, 1.0);
    let d3 = DephasingModel::<f64>::three_level();
    for seed in [42u64, 7, 2024, 1234, 777] {
        let (_f, _t, s2) = tunneling_ensemble(&d2, eps, m, 4000, seed, 0, 1e-6, &cfg).unwrap();
        let scaled: Vec<f64> = s2.iter().map(|s| s.t_sim[0] / eps).collect();
        let a = exponential_audit(&scaled, mu).unwrap();
        let dev_sigma = (a.mean - mu) / a.mean_stderr;
        let m2/*sigma*/ = (a.moment_ratios[0].ratio - 1.0) / a.moment_ratios[0].stderr;
        let m3 = (a.moment_ratios[1].ratio - 1.0) / a.moment_ratios[1].stderr;
        let (_f3, _t3, s3) = tunneling_ensemble(&d3, eps, m, 4000, seed, 0, 1e-6, &cfg).unwrap();
        let t1: Vec<f64> = s3.iter().map(|s| s.t_sim[0]).collect();
        let t2: Vec<f64> = s3.iter().map(|s| s.t_sim[1]).collect();
        let ind = independence_audit(&t1, &t2).unwrap();
        let ratio_sigma = (ind.product_moment_ratio - 1.0) / ind.ratio_stderr;
        println!("seed {seed}: C1 {:+.2}σ | C2 KS {:.4}/{:.4} m2 {:+.2}σ m3 {:+.2}σ | C3 corr {:+.4} ratio {:+.2}σ",
            dev_sigma, a.cdf_distance, a.cdf_threshold, m2, m3, ind.correlation, ratio_sigma);
    }
}
