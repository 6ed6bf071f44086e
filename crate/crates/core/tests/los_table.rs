use pcd_core::diagnostics::{chi_square_gof, compare_models, CompareOptions};
use pcd_core::inflated::{thipcd_mle, thipd_mle};
use pcd_core::numkernel::OptimizerConfig;
use pcd_core::FrequencyTable;

const COUNTS: [u64; 15] = [45, 35, 35, 47, 40, 20, 13, 8, 4, 5, 3, 1, 4, 0, 1];
const THIPCD_EXPECTED: [f64; 15] =
    [42.43, 39.91, 38.21, 47.00, 27.67, 21.10, 15.24, 10.54, 7.03, 4.56, 2.88, 1.79, 1.09, 0.65, 0.39];

fn los() -> FrequencyTable {
    FrequencyTable::from_pairs(COUNTS.iter().enumerate().map(|(v, &c)| (v as u64, c)).collect()).unwrap()
}

#[test]
fn summary_statistics() {
    let t = los();
    assert_eq!(t.n(), 261);
    assert!((t.mean() - 820.0 / 261.0).abs() < 1e-12);
}

#[test]
fn thipcd_fit_matches_reference_values() {
    let t = los();
    let r = thipcd_mle(&t, &OptimizerConfig::default(), 0.95).unwrap();
    assert!(r.converged);
    assert!((-r.log_likelihood - 579.62).abs() < 0.5);
    assert!((r.aic - 1165.25).abs() < 1.0);
    assert!((r.bic - 1175.94).abs() < 1.0);
    for (x, (e, p)) in r.expected_frequencies(14).iter().zip(THIPCD_EXPECTED).enumerate() {
        assert!((e - p).abs() < 0.5, "x = {x}: {e} vs {p}");
    }
    assert!(r.parameters.iter().all(|p| p.std_error.is_some()));
}

#[test]
fn thipd_fit_matches_reference_values() {
    let t = los();
    let r = thipd_mle(&t, &OptimizerConfig::default(), 0.95).unwrap();
    assert!((-r.log_likelihood - 640.79).abs() < 0.5);
    assert!((r.aic - 1285.58).abs() < 1.0);
    assert!((r.bic - 1292.70).abs() < 1.0);
    assert!((r.expected_frequencies(0)[0] - 11.26).abs() < 0.3);
}

#[test]
fn thipcd_ranks_first_and_gof() {
    let t = los();
    let cfg = OptimizerConfig::default();
    let a = thipcd_mle(&t, &cfg, 0.95).unwrap();
    let b = thipd_mle(&t, &cfg, 0.95).unwrap();
    let options = CompareOptions { min_expected: 5.0, df_override: Some(5) };
    let table = compare_models(&[b.clone(), a.clone()], &t, &options).unwrap();
    assert_eq!(table.best_model, "thipcd");
    assert!(table.rows[0].best && !table.rows[1].best);
    let pmf = |y: u64| a.model.pmf(y);
    let g = chi_square_gof(&t, &pmf, 3, 5.0, Some(5)).unwrap();
    assert_eq!(g.df, 5);
    assert!((g.chi_sq - 8.81).abs() < 1.0);
    assert!(table.rows[1].chi_sq.unwrap() > 100.0);
}
