use pcd_core::numkernel::{Matrix, OptimizerConfig};
use pcd_core::pcd::{self, eta_from_mean};
use pcd_core::regression::{
    pcd_regression_fit, pcd_regression_loglik, pcd_regression_loglik_expanded, profile_log_likelihood, regression_fit,
    simulate_pcd_response, RegressionData, RegressionFamily, RegressionFit, INTERCEPT,
};
use pcd_core::{CountModel, MeanParams, PcdParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const BETA: [f64; 3] = [0.5, -0.3, 0.8];

fn covariates(rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, Vec<f64>)> {
    let x1: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    vec![("x1".into(), x1), ("x2".into(), x2)]
}

fn synthetic(seed: u64, n: usize, beta: &[f64], phi: f64) -> RegressionData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = covariates(&mut rng, n);
    let shell = RegressionData::with_intercept(vec![0; n], &cov).unwrap();
    let y = simulate_pcd_response(shell.design(), beta, phi, &mut rng).unwrap();
    RegressionData::with_intercept(y, &cov).unwrap()
}

fn assert_within_3se(fit: &RegressionFit, beta: &[f64], phi: f64) {
    for (c, &b) in fit.coefficients.iter().zip(beta) {
        let se = c.std_error.unwrap();
        assert!((c.estimate - b).abs() < 3.0 * se, "{}: {} ± {se} vs {b}", c.name, c.estimate);
    }
    let d = fit.dispersion.as_ref().unwrap();
    assert!((d.estimate - phi).abs() < 3.0 * d.std_error.unwrap(), "phi {d:?}");
}

#[test]
fn synthetic_recovery() {
    let data = synthetic(20_240_601, 2000, &BETA, 1.0);
    let fit = pcd_regression_fit(&data, &OptimizerConfig::default()).unwrap();
    assert!(fit.converged);
    assert_within_3se(&fit, &BETA, 1.0);
    assert_eq!(fit.coefficients[0].name, INTERCEPT);
    assert_eq!(fit.k, 4);
    assert!((fit.aic - (8.0 - 2.0 * fit.log_likelihood)).abs() < 1e-9);
}

#[test]
fn link_and_reparametrization() {
    let data = synthetic(5, 400, &BETA, 2.0);
    let fit = pcd_regression_fit(&data, &OptimizerConfig::default()).unwrap();
    let beta = fit.beta();
    let phi = fit.dispersion.as_ref().unwrap().estimate;
    for (i, &mu) in fit.fitted_means.iter().enumerate() {
        let lp: f64 = data.design().row(i).iter().zip(&beta).map(|(x, b)| x * b).sum();
        assert_eq!(mu, lp.exp());
        assert!(mu > 0.0);
        let eta = eta_from_mean(&MeanParams::new(mu, phi).unwrap()).unwrap();
        let back = pcd::mean(&PcdParams::new(eta, phi).unwrap());
        assert!((back - mu).abs() < 1e-10 * mu.max(1.0));
        let CountModel::Pcd(p) = fit.row_model(i).unwrap() else { panic!("pcd row model") };
        assert!((p.eta() - eta).abs() < 1e-12 * eta);
    }
    let ll = pcd_regression_loglik(&data, &beta, phi).unwrap();
    assert!((ll - fit.log_likelihood).abs() < 1e-9 * ll.abs());
}

#[test]
fn intercept_only_reproduces_mean() {
    let p = PcdParams::new(0.6, 2.0).unwrap();
    let y = pcd::sample(&p, &mut ChaCha8Rng::seed_from_u64(3), 1500);
    let mean = y.iter().sum::<u64>() as f64 / y.len() as f64;
    let data = RegressionData::with_intercept(y, &[]).unwrap();
    for family in [RegressionFamily::Pcd, RegressionFamily::Poisson, RegressionFamily::NegativeBinomial] {
        let fit = regression_fit(family, &data, &OptimizerConfig::default()).unwrap();
        let mu = fit.coefficients[0].estimate.exp();
        assert!((mu - mean).abs() < 1e-3 * mean, "{family:?}: {mu} vs {mean}");
    }
}

#[test]
fn negative_binomial_recovery_and_poisson_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 2000;
    let cov = covariates(&mut rng, n);
    let shell = RegressionData::with_intercept(vec![0; n], &cov).unwrap();
    let draw = |rng: &mut ChaCha8Rng, spec: &dyn Fn(f64) -> CountModel| -> Vec<u64> {
        (0..n)
            .map(|i| {
                let lp: f64 = shell.design().row(i).iter().zip(BETA).map(|(x, b)| x * b).sum();
                spec(lp.exp()).draw(rng)
            })
            .collect()
    };
    use pcd_core::baselines::BaselineSpec;
    let y = draw(&mut rng, &|mu| CountModel::Baseline(BaselineSpec::NegativeBinomial { mean: mu, size: 2.0 }));
    let data = RegressionData::with_intercept(y, &cov).unwrap();
    let fit = regression_fit(RegressionFamily::NegativeBinomial, &data, &OptimizerConfig::default()).unwrap();
    assert_within_3se(&fit, &BETA, 2.0);

    let y = draw(&mut rng, &|mu| CountModel::Baseline(BaselineSpec::Poisson { lambda: mu }));
    let data = RegressionData::with_intercept(y, &cov).unwrap();
    let cfg = OptimizerConfig::default();
    let nb = regression_fit(RegressionFamily::NegativeBinomial, &data, &cfg).unwrap();
    let po = regression_fit(RegressionFamily::Poisson, &data, &cfg).unwrap();
    assert!(nb.dispersion.as_ref().unwrap().estimate > 20.0, "{:?}", nb.dispersion);
    assert!(nb.log_likelihood >= po.log_likelihood - 1e-6);
    for (a, b) in nb.beta().iter().zip(po.beta()) {
        assert!((a - b).abs() < 0.02);
    }
}

#[test]
fn standard_errors_shrink_with_n() {
    let cfg = OptimizerConfig::default();
    let median_se = |n: usize, seeds: std::ops::Range<u64>| {
        let mut ses: Vec<f64> = seeds
            .map(|s| {
                let fit = pcd_regression_fit(&synthetic(s, n, &BETA, 1.0), &cfg).unwrap();
                fit.coefficients[1].std_error.unwrap()
            })
            .collect();
        ses.sort_by(f64::total_cmp);
        ses[ses.len() / 2]
    };
    let ratio = median_se(400, 100..121) / median_se(800, 200..221);
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn profile_peaks_at_estimate() {
    let data = synthetic(12, 300, &BETA, 1.0);
    let cfg = OptimizerConfig::default();
    let fit = pcd_regression_fit(&data, &cfg).unwrap();
    let traces = profile_log_likelihood(&data, &fit, &cfg, 7).unwrap();
    assert_eq!(traces.len(), 4);
    for t in &traces {
        let mid = &t.points[t.points.len() / 2];
        for p in &t.points {
            assert!(p.log_likelihood <= fit.log_likelihood + 1e-6, "{}: {p:?}", t.parameter);
        }
        assert!((mid.log_likelihood - fit.log_likelihood).abs() < 1e-3, "{}", t.parameter);
        let ends = [t.points[0].log_likelihood, t.points.last().unwrap().log_likelihood];
        for e in ends {
            assert!(
                fit.log_likelihood - e > 1.0 && fit.log_likelihood - e < 10.0,
                "{}: drop {}",
                t.parameter,
                fit.log_likelihood - e
            );
        }
    }
}

fn random_rows() -> impl Strategy<Value = (Vec<u64>, Vec<f64>, Vec<f64>, [f64; 3], f64)> {
    (
        proptest::collection::vec(0u64..60, 100),
        proptest::collection::vec(-2.0f64..2.0, 100),
        proptest::collection::vec(0.0f64..1.0, 100),
        (-1.0f64..1.5, -1.0f64..1.0, -1.0f64..1.0),
        0.0f64..20.0,
    )
        .prop_map(|(y, a, b, (b0, b1, b2), phi)| (y, a, b, [b0, b1, b2], phi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expanded_matches_composed((y, a, b, beta, phi) in random_rows()) {
        let data = RegressionData::with_intercept(y, &[("a".into(), a), ("b".into(), b)]).unwrap();
        let composed = pcd_regression_loglik(&data, &beta, phi).unwrap();
        let expanded = pcd_regression_loglik_expanded(&data, &beta, phi).unwrap();
        prop_assert!((composed - expanded).abs() < 1e-8, "{} vs {}", composed, expanded);
    }

    #[test]
    fn design_rank_check(c in -3.0f64..3.0) {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let z: Vec<f64> = x.iter().map(|v| c * v + 1.0).collect();
        let r = RegressionData::with_intercept(vec![1; 20], &[("x".into(), x), ("z".into(), z)]);
        prop_assert!(r.is_err());
    }
}

#[test]
fn design_from_matrix() {
    let m = Matrix::from_rows(&[vec![1.0, 0.2], vec![1.0, 0.5], vec![1.0, 0.9]]).unwrap();
    let d = RegressionData::new(vec![0, 2, 5], m, vec![INTERCEPT.into(), "x".into()]).unwrap();
    assert_eq!(d.n(), 3);
    assert_eq!(d.n_coefficients(), 2);
}
