//! Acceptance run: one PASS/FAIL line per check, non-zero exit on any FAIL.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Parser;
use pcd_validation::{ks_critical_1pct, ks_statistic, rate, timed, Report};
use pcd_cli::{input::load_counts, run, Cli};
use pcd_core::baselines::{baseline_mle, Family};
use pcd_core::diagnostics::{chi_square_gof, model_residuals, shapiro_wilk};
use pcd_core::estimation::{
    mle_fit, mle_fit_table, mom_asymptotic_variance, mom_bias_experiment, mom_candidates, MomEstimator,
};
use pcd_core::inflated::{thipcd_mle, thipd_mle};
use pcd_core::numkernel::OptimizerConfig;
use pcd_core::pcd;
use pcd_core::regression::{
    pcd_regression_fit, pcd_regression_loglik, pcd_regression_loglik_expanded, simulate_pcd_response, RegressionData,
};
use pcd_core::{FrequencyTable, PcdParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const THIPCD_EXPECTED: [f64; 15] =
    [42.43, 39.91, 38.21, 47.00, 27.67, 21.10, 15.24, 10.54, 7.03, 4.56, 2.88, 1.79, 1.09, 0.65, 0.39];

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn los() -> FrequencyTable {
    let bytes = std::fs::read(workspace().join("data/los_pancreas.csv")).expect("bundled LOS table");
    load_counts(&bytes, None).expect("LOS table parses")
}

fn close(value: f64, target: f64, tol: f64) -> (bool, String) {
    ((value - target).abs() <= tol, format!("{value:.4} (target {target} ± {tol})"))
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn criterion_1_2_3(r: &mut Report) {
    let table = los();
    let cfg = OptimizerConfig::default();
    let (fit, elapsed) = timed(|| thipcd_mle(&table, &cfg, 0.95));
    let fit = fit.expect("thipcd fit");
    let (ok, d) = close(-fit.log_likelihood, 579.62, 0.5);
    r.check("1 thipcd -loglik", ok, d);
    let (ok, d) = close(fit.aic, 1165.25, 1.0);
    r.check("1 thipcd AIC", ok, d);
    let (ok, d) = close(fit.bic, 1175.94, 1.0);
    r.check("1 thipcd BIC", ok, d);
    let expected = fit.expected_frequencies(14);
    let worst = expected.iter().zip(THIPCD_EXPECTED).map(|(e, p)| (e - p).abs()).fold(0.0, f64::max);
    r.check("1 thipcd expected column", worst <= 0.5, format!("largest cell deviation {worst:.3} (± 0.5)"));
    r.runtime("1 runtime", elapsed, Duration::from_secs(5));

    let base = thipd_mle(&table, &cfg, 0.95).expect("thipd fit");
    let (ok, d) = close(-base.log_likelihood, 640.79, 0.5);
    r.check("2 thipd -loglik", ok, d);
    let (ok, d) = close(base.aic, 1285.58, 1.0);
    r.check("2 thipd AIC", ok, d);
    let (ok, d) = close(base.bic, 1292.70, 1.0);
    r.check("2 thipd BIC", ok, d);
    let (ok, d) = close(base.expected_frequencies(0)[0], 11.26, 0.3);
    r.check("2 thipd E[0]", ok, d);

    let pmf = |y: u64| fit.model.pmf(y);
    let g = chi_square_gof(&table, &pmf, fit.k, 5.0, Some(5)).expect("thipcd chi-square");
    let (ok, d) = close(g.chi_sq, 8.81, 1.0);
    r.check("3 thipcd chi-square", ok, format!("{d}, {} cells, df {}", g.bins.len(), g.df));
    let (ok, d) = close(g.p_value, 0.185, 0.05);
    r.check("3 thipcd p-value", ok, d);
    let pmf = |y: u64| base.model.pmf(y);
    let g = chi_square_gof(&table, &pmf, base.k, 5.0, Some(5)).expect("thipd chi-square");
    r.check("3 thipd chi-square", g.chi_sq > 100.0, format!("{:.2} (> 100)", g.chi_sq));
}

fn grid() -> Vec<PcdParams> {
    let etas = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 20.0];
    let phis = [0.0, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0];
    etas.iter().flat_map(|&e| phis.iter().map(move |&p| PcdParams::new(e, p).unwrap())).collect()
}

fn ln_factorial(x: u64) -> f64 {
    (2..=x).map(|k| (k as f64).ln()).sum()
}

/// Poisson pmf integrated against the latent exponential/gamma(4) mixture
/// with composite Simpson on a fine grid.
fn mixed_poisson(eta: f64, phi: f64, x: u64) -> f64 {
    let w = eta / (phi + eta);
    let density = |l: f64| w * eta * (-eta * l).exp() + (1.0 - w) * eta.powi(4) * l.powi(3) * (-eta * l).exp() / 6.0;
    let xf = x as f64;
    let f = |l: f64| {
        if l <= 0.0 {
            return if x == 0 { density(0.0) } else { 0.0 };
        }
        (-l + xf * l.ln() - ln_factorial(x)).exp() * density(l)
    };
    let upper = (xf + 63.0 + 12.0 * (xf + 4.0).sqrt()) / eta.min(1.0);
    let panels = 200_000;
    let h = upper / panels as f64;
    let inner: f64 = (1..panels).map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(0.0) + inner + f(upper))
}

fn criterion_4(r: &mut Report) {
    let ((), elapsed) = timed(|| {
        let worst_norm = grid()
            .iter()
            .map(|p| {
                let x_max = pcd::support_bound(p, 1e-14);
                (1.0 - (0..=x_max).map(|x| pcd::pmf(p, x)).sum::<f64>()).abs()
            })
            .fold(0.0, f64::max);
        r.check("4 normalization", worst_norm < 1e-12, format!("largest remainder {worst_norm:.2e} (< 1e-12)"));

        let mut worst_quad: f64 = 0.0;
        for (eta, phi) in [(0.25, 0.5), (1.0, 1.0), (4.0, 10.0), (0.5, 3.0), (2.0, 0.0)] {
            let p = PcdParams::new(eta, phi).unwrap();
            for x in 0..=30 {
                worst_quad = worst_quad.max((mixed_poisson(eta, phi, x) - pcd::pmf(&p, x)).abs());
            }
        }
        r.check("4 mixed-Poisson quadrature", worst_quad < 1e-8, format!("largest gap {worst_quad:.2e} (< 1e-8)"));

        let mut worst_geo: f64 = 0.0;
        for eta in [0.1, 0.25, 1.0, 4.0, 17.0] {
            let p = PcdParams::new(eta, 0.0).unwrap();
            let q = eta / (1.0 + eta);
            for x in 0..200u64 {
                let g = q * (1.0 - q).powi(x as i32);
                worst_geo = worst_geo.max(((pcd::pmf(&p, x) - g) / g).abs());
            }
        }
        r.check("4 geometric reduction", worst_geo < 1e-12, format!("largest relative gap {worst_geo:.2e}"));

        let mut worst_mom: f64 = 0.0;
        let mut di_ok = true;
        for p in grid() {
            let x_max = 4 * pcd::support_bound(&p, 1e-16) + 200;
            let probs: Vec<f64> = (0..=x_max).map(|x| pcd::pmf(&p, x)).collect();
            let brute = |f: &dyn Fn(f64) -> f64| probs.iter().enumerate().map(|(x, q)| f(x as f64) * q).sum::<f64>();
            for k in 1..=4u32 {
                let falling = |x: f64| (0..k).map(|j| x - j as f64).product::<f64>();
                let b = brute(&falling);
                worst_mom = worst_mom.max(((pcd::factorial_moment(&p, k) - b) / b).abs());
            }
            let m = pcd::moments(&p);
            for (k, v) in [(1, m.mean), (2, m.raw2), (3, m.raw3), (4, m.raw4)] {
                let b = brute(&|x: f64| x.powi(k));
                worst_mom = worst_mom.max(((v - b) / b).abs());
            }
            di_ok &= m.dispersion_index > 1.0;
        }
        r.check("4 moments brute force", worst_mom < 1e-8, format!("largest relative gap {worst_mom:.2e} (< 1e-8)"));
        r.check("4 dispersion index > 1", di_ok, format!("{} grid points", grid().len()));

        let mut worst_one: f64 = 0.0;
        let mut worst_series: f64 = 0.0;
        for p in grid() {
            worst_one = worst_one.max((pcd::pgf(&p, 1.0).unwrap() - 1.0).abs());
            let x_max = pcd::support_bound(&p, 1e-18) + 400;
            for s in [-0.9f64, -0.5, 0.0, 0.3, 0.6, 0.9] {
                let series: f64 = (0..=x_max).map(|x| pcd::pmf(&p, x) * s.powi(x as i32)).sum();
                worst_series = worst_series.max((pcd::pgf(&p, s).unwrap() - series).abs());
            }
        }
        r.check("4 pgf at one", worst_one < 1e-14, format!("|P(1) - 1| <= {worst_one:.2e}"));
        r.check("4 pgf series", worst_series < 1e-10, format!("largest gap {worst_series:.2e} (< 1e-10)"));
    });
    r.runtime("4 runtime", elapsed, Duration::from_secs(30));
}

fn criterion_5(r: &mut Report) {
    let ((), elapsed) = timed(|| {
        let mut worst: f64 = 0.0;
        for p in grid() {
            let m = pcd::moments(&p);
            let cands = mom_candidates(m.mean, m.raw2).unwrap_or_default();
            let gap = cands
                .iter()
                .map(|c| {
                    ((c.eta() - p.eta()).abs() / p.eta().max(1.0)).max((c.phi() - p.phi()).abs() / p.phi().max(1.0))
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(gap);
        }
        r.check("5 moment round trip", worst < 1e-10, format!("largest relative gap {worst:.2e}"));

        let truth = PcdParams::new(1.0, 1.0).unwrap();
        let small = mom_bias_experiment(&truth, 30, 2000, 30, MomEstimator::FixedPhi).expect("bias experiment");
        r.check(
            "5 moment bias at n = 30",
            small.bias > 0.0,
            format!("bias {:.4} over {} feasible replications", small.bias, small.feasible),
        );

        let sample = pcd::sample(&truth, &mut seeded(5000, 0), 5000);
        let fit = mle_fit(&sample, &OptimizerConfig::default()).expect("mle fit");
        let mut ok = fit.converged;
        let mut detail = String::new();
        for name in ["eta", "phi"] {
            let (e, se) = (fit.estimate(name).unwrap(), fit.std_error(name).unwrap_or(f64::NAN));
            ok &= (e - 1.0).abs() < 3.0 * se;
            detail += &format!("{name} {e:.4} ± {se:.4}  ");
        }
        r.check("5 MLE within 3 SE", ok, detail.trim_end());

        let nu2 = mom_asymptotic_variance(&truth);
        let big = mom_bias_experiment(&truth, 2000, 2000, 2000, MomEstimator::FixedPhi).expect("variance experiment");
        let rel = big.scaled_variance / nu2 - 1.0;
        r.check(
            "5 scaled moment variance",
            rel.abs() <= 0.15,
            format!("n Var = {:.4}, delta method {nu2:.4} ({:+.1}%)", big.scaled_variance, 100.0 * rel),
        );
    });
    r.runtime("5 runtime", elapsed, Duration::from_secs(180));
}

fn design(rng: &mut ChaCha8Rng, n: usize, names: [&str; 2], uniform_second: bool) -> Vec<(String, Vec<f64>)> {
    let x1: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let x2: Vec<f64> =
        (0..n).map(|_| if uniform_second { rng.random::<f64>() } else { rng.sample(StandardNormal) }).collect();
    vec![(names[0].into(), x1), (names[1].into(), x2)]
}

fn synthetic(seed: u64, n: usize, beta: &[f64], phi: f64, uniform_second: bool) -> RegressionData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = design(&mut rng, n, ["x1", "x2"], uniform_second);
    let shell = RegressionData::with_intercept(vec![0; n], &cov).unwrap();
    let y = simulate_pcd_response(shell.design(), beta, phi, &mut rng).unwrap();
    RegressionData::with_intercept(y, &cov).unwrap()
}

fn criterion_6(r: &mut Report) {
    let beta = [0.5, -0.3, 0.8];
    let cfg = OptimizerConfig::default();
    let ((), elapsed) = timed(|| {
        let fit = pcd_regression_fit(&synthetic(20_240_601, 2000, &beta, 1.0, true), &cfg).expect("regression fit");
        let mut ok = fit.converged;
        let mut detail = String::new();
        for (c, b) in fit.coefficients.iter().zip(beta) {
            let se = c.std_error.unwrap_or(f64::NAN);
            ok &= (c.estimate - b).abs() < 3.0 * se;
            detail += &format!("{} {:.3}±{se:.3} ", c.name, c.estimate);
        }
        let d = fit.dispersion.as_ref().unwrap();
        let se = d.std_error.unwrap_or(f64::NAN);
        ok &= (d.estimate - 1.0).abs() < 3.0 * se;
        detail += &format!("phi {:.3}±{se:.3}", d.estimate);
        r.check("6 regression recovery", ok, detail);

        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let n = 100;
            let cov = design(&mut rng, n, ["a", "b"], true);
            let y: Vec<u64> = (0..n).map(|_| rng.random_range(0..60)).collect();
            let data = RegressionData::with_intercept(y, &cov).unwrap();
            let b = [rng.random_range(-1.0..1.5), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let phi = rng.random_range(0.0..20.0);
            let composed = pcd_regression_loglik(&data, &b, phi).unwrap();
            let expanded = pcd_regression_loglik_expanded(&data, &b, phi).unwrap();
            worst = worst.max((composed - expanded).abs());
        }
        r.check("6 expanded log-likelihood identity", worst < 1e-8, format!("largest gap {worst:.2e} over 200 draws"));

        let median_se = |n: usize, seeds: std::ops::Range<u64>| {
            let mut ses: Vec<f64> = seeds
                .map(|s| {
                    pcd_regression_fit(&synthetic(s, n, &beta, 1.0, true), &cfg).unwrap().coefficients[1]
                        .std_error
                        .unwrap()
                })
                .collect();
            ses.sort_by(f64::total_cmp);
            ses[ses.len() / 2]
        };
        let ratio = median_se(400, 1000..1041) / median_se(800, 2000..2041);
        r.check(
            "6 standard-error shrinkage",
            (ratio / 2f64.sqrt() - 1.0).abs() <= 0.15,
            format!("median SE ratio {ratio:.4} vs sqrt 2 = {:.4}", 2f64.sqrt()),
        );

        let null_beta = [0.5, -0.3, 0.0];
        let sims = 500;
        let rejections = (0..sims)
            .filter(|&s| {
                let fit = pcd_regression_fit(&synthetic(50_000 + s, 500, &null_beta, 1.0, false), &cfg).unwrap();
                fit.coefficient("x2").and_then(|c| c.p_value).is_some_and(|p| p < 0.05)
            })
            .count();
        let rr = rate(rejections, sims as usize);
        r.check(
            "6 null rejection rate",
            (0.02..=0.09).contains(&rr),
            format!("{rr:.3} over {sims} fits (in [0.02, 0.09])"),
        );
    });
    r.runtime("6 runtime", elapsed, Duration::from_secs(300));
}

fn criterion_7(r: &mut Report) {
    let cfg = OptimizerConfig::default();
    let ((), elapsed) = timed(|| {
        let truth = PcdParams::new(1.0, 1.0).unwrap();
        let reps = 200;
        let rejected = (0..reps)
            .filter(|&rep| {
                let sample = pcd::sample(&truth, &mut seeded(7_000, rep), 500);
                let table = FrequencyTable::from_values(&sample).unwrap();
                let fit = mle_fit_table(&table, &cfg, 0.95).unwrap();
                model_residuals(&fit.model, &sample, rep).unwrap().shapiro_p.unwrap() < 0.05
            })
            .count();
        let rr = rate(rejected, reps as usize);
        r.check(
            "7 residuals, correct model",
            rr <= 0.10,
            format!("Shapiro-Wilk rejection {rr:.3} over {reps} (<= 0.10)"),
        );

        let heavy = PcdParams::new(0.1, 1.0).unwrap();
        let rejected = (0..reps)
            .filter(|&rep| {
                let sample = pcd::sample(&heavy, &mut seeded(7_100, rep), 500);
                let table = FrequencyTable::from_values(&sample).unwrap();
                let fit = baseline_mle(Family::Poisson, &table, &cfg, 0.95).unwrap();
                model_residuals(&fit.model, &sample, rep).unwrap().shapiro_p.unwrap() < 0.05
            })
            .count();
        let rr = rate(rejected, reps as usize);
        r.check("7 residuals, Poisson misfit", rr > 0.5, format!("Shapiro-Wilk rejection {rr:.3} over {reps} (> 0.5)"));

        let pmf = |y: u64| pcd::pmf(&truth, y);
        let p_values: Vec<f64> = (0..500)
            .map(|rep| {
                let sample = pcd::sample(&truth, &mut seeded(7_200, rep), 500);
                let table = FrequencyTable::from_values(&sample).unwrap();
                chi_square_gof(&table, &pmf, 0, 5.0, None).unwrap().p_value
            })
            .collect();
        let d = ks_statistic(&p_values, |u| u.clamp(0.0, 1.0));
        let crit = ks_critical_1pct(p_values.len());
        r.check("7 chi-square p uniformity", d < crit, format!("KS distance {d:.4} (1% critical {crit:.4})"));

        let refs: [(&[f64], f64, f64); 3] = [
            (
                &[148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0, 182.0, 195.0, 236.0],
                0.788_814_694_863_171_6,
                0.006_703_814_061_898_823,
            ),
            (
                &[
                    0.47, -1.2, 0.33, 2.41, -0.05, 1.17, -0.66, 0.89, 0.12, -1.87, 0.58, 1.43, -0.31, 0.02, -0.94,
                    0.77, 1.98, -0.45, 0.21, 3.15,
                ],
                0.983_218_159_058_495_1,
                0.968_600_474_581_599_6,
            ),
            (&N60, 0.766_044_983_821_985_8, 2.111_678_164_305_475_4e-8),
        ];
        let worst = refs
            .iter()
            .map(|(x, w, p)| {
                let s = shapiro_wilk(x).unwrap();
                (s.w - w).abs().max((s.p - p).abs())
            })
            .fold(0.0, f64::max);
        r.check("7 Shapiro-Wilk references", worst < 1e-4, format!("largest gap {worst:.2e} (< 1e-4)"));
    });
    r.runtime("7 runtime", elapsed, Duration::from_secs(180));
}

#[allow(clippy::approx_constant)]
const N60: [f64; 60] = [
    0.8532, 0.1145, 0.1692, 1.2957, 2.3313, 0.2339, 0.5192, 0.4343, 0.0864, 1.0208, 0.389, 0.4365, 0.7204, 0.0015,
    0.118, 4.6198, 3.1774, 0.4769, 0.4618, 0.0703, 3.073, 1.6355, 1.1142, 0.2857, 0.2722, 3.4987, 0.4059, 0.396,
    0.1211, 0.9939, 0.1445, 0.8094, 0.2226, 1.7688, 0.4009, 0.7858, 0.0606, 0.0712, 0.1208, 4.1287, 1.4774, 2.0378,
    0.1584, 0.2634, 0.7863, 0.1192, 0.0145, 1.7444, 0.0215, 0.1991, 0.1008, 0.7072, 1.0867, 1.3466, 0.2913, 2.0925,
    0.0967, 1.5338, 0.6589, 4.028,
];

fn invoke(args: &[&str]) -> bool {
    let cli = Cli::try_parse_from(std::iter::once("pcd").chain(args.iter().copied())).expect("valid arguments");
    run(&cli, &args.join(" ")).map(|o| o.converged).unwrap_or(false)
}

fn criterion_8(r: &mut Report) {
    let dir = tempfile::tempdir().expect("temporary directory");
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap_or_default();

    for tag in ["a", "b"] {
        let out = path(&format!("sim-{tag}.txt"));
        invoke(&["simulate", "pcd", "--eta", "0.7", "--phi", "2", "-n", "1000", "--seed", "88", "--out", &out]);
        let input = out.clone();
        let out = path(&format!("fit-{tag}.json"));
        invoke(&["fit", "pcd", &input, "--out", &out]);
    }
    let sims_equal = !read("sim-a.txt").is_empty() && read("sim-a.txt") == read("sim-b.txt");
    r.check("8 simulate reproducible", sims_equal, "two runs with seed 88 are byte-identical");
    let fits_equal = !read("fit-a.json").is_empty() && read("fit-a.json") == read("fit-b.json");
    r.check("8 simulate-fit reproducible", fits_equal, "fits of the two samples are byte-identical");

    let golden = workspace().join("crates/cli/tests/golden");
    let los_path = workspace().join("data/los_pancreas.csv").to_string_lossy().into_owned();
    let cases: [(&str, Vec<&str>); 3] = [
        ("fit_thipcd_los.json", vec!["fit", "thipcd", &los_path]),
        (
            "compare_los.json",
            vec!["compare", "thipcd,thipd,pcd,poisson", &los_path, "--df-override", "5", "--output", "json"],
        ),
        ("simulate_pcd.txt", vec!["simulate", "pcd", "--eta", "1", "--phi", "1", "-n", "50", "--seed", "2024"]),
    ];
    for (name, args) in cases {
        let out = path(name);
        let mut full = args.clone();
        full.extend(["--out", &out]);
        invoke(&full);
        let expected = std::fs::read(golden.join(name)).unwrap_or_default();
        r.check(
            &format!("8 golden {name}"),
            !expected.is_empty() && expected == read(name),
            "matches the checked-in copy",
        );
    }
}

fn main() {
    let mut report = Report::new();
    criterion_1_2_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    std::process::exit(report.finish());
}
