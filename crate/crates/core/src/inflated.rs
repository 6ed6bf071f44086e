//! Three-inflated count models: extra probability mass `α` at the value 3 on
//! top of a Poisson-Copoun (ThIPCD) or Poisson (ThIPD) base.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::poisson_log_pmf;
use crate::copoun::PcdParams;
use crate::data::FrequencyTable;
use crate::error::{Error, Result};
use crate::estimation::{fit_numeric, FitProblem, FitReport, ParamSpec, Transform};
use crate::model::CountModel;
use crate::numkernel::OptimizerConfig;
use crate::pcd::{self, poisson_draw, MeanParams};

const INFLATED_VALUE: u64 = 3;

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha must lie in [0, 1), got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflatedParams {
    eta: f64,
    phi: f64,
    alpha: f64,
}

impl InflatedParams {
    pub fn new(eta: f64, phi: f64, alpha: f64) -> Result<Self> {
        PcdParams::new(eta, phi)?;
        check_alpha(alpha)?;
        Ok(Self { eta, phi, alpha })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> PcdParams {
        PcdParams::new(self.eta, self.phi).expect("validated on construction")
    }
}

pub fn thipcd_log_pmf(params: &InflatedParams, y: u64) -> f64 {
    let base = params.base();
    let a = params.alpha;
    if y == INFLATED_VALUE {
        (a + (1.0 - a) * pcd::pmf(&base, y)).ln()
    } else {
        (-a).ln_1p() + pcd::log_pmf(&base, y)
    }
}

pub fn thipcd_pmf(params: &InflatedParams, y: u64) -> f64 {
    thipcd_log_pmf(params, y).exp()
}

/// `P_ThIPCD(3) - P_PCD(3) = α(1 - pcd_pmf(3))`.
pub fn thipcd_inflation_gap(params: &InflatedParams) -> Result<f64> {
    if !(params.alpha > 0.0) {
        return Err(Error::Precondition("inflation gap requires alpha > 0".into()));
    }
    Ok(params.alpha * (1.0 - pcd::pmf(&params.base(), INFLATED_VALUE)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflatedMoments {
    pub mean: f64,
    pub raw2: f64,
    pub raw3: f64,
    pub raw4: f64,
    pub variance: f64,
}

pub fn thipcd_moments(params: &InflatedParams) -> InflatedMoments {
    let m = pcd::moments(&params.base());
    let a = params.alpha;
    let mix = |r: i32, base: f64| 3f64.powi(r) * a + (1.0 - a) * base;
    let mean = mix(1, m.mean);
    let raw2 = mix(2, m.raw2);
    InflatedMoments { mean, raw2, raw3: mix(3, m.raw3), raw4: mix(4, m.raw4), variance: raw2 - mean * mean }
}

pub fn thipcd_pgf(params: &InflatedParams, s: f64) -> Result<f64> {
    let base = pcd::pgf(&params.base(), s)?;
    Ok(params.alpha * s.powi(3) + (1.0 - params.alpha) * base)
}

pub fn thipcd_mgf(params: &InflatedParams, t: f64) -> Result<f64> {
    let base = pcd::mgf(&params.base(), t)?;
    Ok(params.alpha * (3.0 * t).exp() + (1.0 - params.alpha) * base)
}

pub fn thipcd_characteristic_function(params: &InflatedParams, t: f64) -> Complex64 {
    let base = pcd::characteristic_function(&params.base(), t);
    Complex64::from_polar(params.alpha, 3.0 * t) + base * (1.0 - params.alpha)
}

/// One draw. With `α = 0` no inflation coin is tossed, so the stream matches
/// the plain Poisson-Copoun sampler.
pub fn thipcd_draw<R: Rng + ?Sized>(params: &InflatedParams, rng: &mut R) -> u64 {
    if params.alpha > 0.0 {
        let u: f64 = rng.random();
        if u < params.alpha {
            return INFLATED_VALUE;
        }
    }
    pcd::draw(&params.base(), rng)
}

pub fn thipcd_sample<R: Rng + ?Sized>(params: &InflatedParams, rng: &mut R, n: usize) -> Vec<u64> {
    (0..n).map(|_| thipcd_draw(params, rng)).collect()
}

/// Log-likelihood written with the count `n₀` of observed 3s split out and
/// the remaining terms expanded in linear space.
pub fn thipcd_split_log_likelihood(params: &InflatedParams, table: &FrequencyTable) -> f64 {
    let (eta, phi, alpha) = (params.eta, params.phi, params.alpha);
    let n = table.n() as f64;
    let n0 = table.count_of(INFLATED_VALUE) as f64;
    let p3 = eta * eta / ((phi + eta) * (1.0 + eta).powi(7)) * ((1.0 + eta).powi(3) + 20.0 * phi * eta * eta);
    let mut ll = (n - n0) * ((1.0 - alpha).ln() + 2.0 * eta.ln() - (phi + eta).ln());
    if n0 > 0.0 {
        ll += n0 * (alpha + (1.0 - alpha) * p3).ln();
    }
    for &(y, c) in table.entries() {
        if y == INFLATED_VALUE || c == 0 {
            continue;
        }
        let yf = y as f64;
        let bracket = (1.0 + eta).powi(3) + phi * eta * eta / 6.0 * (yf + 1.0) * (yf + 2.0) * (yf + 3.0);
        ll += c as f64 * (bracket.ln() - (yf + 4.0) * eta.ln_1p());
    }
    ll
}

/// Poisson base with inflation at 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThipdParams {
    lambda: f64,
    alpha: f64,
}

impl ThipdParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("lambda must be positive and finite, got {lambda}")));
        }
        check_alpha(alpha)?;
        Ok(Self { lambda, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_pmf(&self, y: u64) -> f64 {
        let (l, a) = (self.lambda, self.alpha);
        if y == INFLATED_VALUE {
            (a + (1.0 - a) * (-l).exp() * l.powi(3) / 6.0).ln()
        } else {
            (-a).ln_1p() + poisson_log_pmf(l, y)
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.alpha > 0.0 {
            let u: f64 = rng.random();
            if u < self.alpha {
                return INFLATED_VALUE;
            }
        }
        poisson_draw(rng, self.lambda)
    }
}

pub fn thipd_log_pmf(lambda: f64, alpha: f64, y: u64) -> Result<f64> {
    Ok(ThipdParams::new(lambda, alpha)?.log_pmf(y))
}

fn inflated_starting_alpha(table: &FrequencyTable, base_p3: f64) -> f64 {
    let share = table.count_of(INFLATED_VALUE) as f64 / table.n() as f64;
    ((share - base_p3) / (1.0 - base_p3)).clamp(0.02, 0.9)
}

/// Maximum likelihood for ThIPCD over `(ln η, ln φ, logit α)` from several
/// starting points; the best optimum is kept.
pub fn thipcd_mle(table: &FrequencyTable, config: &OptimizerConfig, ci_level: f64) -> Result<FitReport> {
    if table.n() < 3 {
        return Err(Error::Precondition("at least three observations are required".into()));
    }
    let mean = table.mean();
    if !(mean > 0.0) {
        return Err(Error::Data("sample mean must be positive".into()));
    }
    let problem = FitProblem::new(
        "thipcd",
        vec![
            ParamSpec::new("eta", Transform::Log),
            ParamSpec::new("phi", Transform::Log).with_boundary(0.0),
            ParamSpec::new("alpha", Transform::Logit).with_boundary(0.0),
        ],
        table.n(),
        ci_level,
    );
    let nll = |v: &[f64]| match InflatedParams::new(v[0], v[1], v[2]) {
        Ok(p) => -table.weighted_sum(|y| thipcd_log_pmf(&p, y)),
        Err(_) => f64::INFINITY,
    };
    let build = |v: &[f64]| Ok(CountModel::Thipcd(InflatedParams::new(v[0], v[1], v[2])?));

    let mut starts = Vec::new();
    for phi0 in [0.1, 1.0, 5.0] {
        let eta0 = pcd::eta_from_mean(&MeanParams::new(mean, phi0)?)?;
        let p3 = pcd::pmf(&PcdParams::new(eta0, phi0)?, INFLATED_VALUE);
        for alpha0 in [inflated_starting_alpha(table, p3), 0.05] {
            starts.push(vec![eta0, phi0, alpha0]);
        }
    }
    let mut report = fit_numeric(&problem, &nll, &starts, config, &build)?;
    if table.count_of(INFLATED_VALUE) == table.n() {
        report.warnings.push("every observation equals 3; alpha is at its upper cap".into());
        for p in report.parameters.iter_mut() {
            p.std_error = None;
            p.ci_lower = None;
            p.ci_upper = None;
        }
    }
    Ok(report)
}

/// Maximum likelihood for ThIPD over `(ln λ, logit α)`.
pub fn thipd_mle(table: &FrequencyTable, config: &OptimizerConfig, ci_level: f64) -> Result<FitReport> {
    if table.n() < 2 {
        return Err(Error::Precondition("at least two observations are required".into()));
    }
    let mean = table.mean();
    if !(mean > 0.0) {
        return Err(Error::Data("sample mean must be positive".into()));
    }
    let problem = FitProblem::new(
        "thipd",
        vec![ParamSpec::new("lambda", Transform::Log), ParamSpec::new("alpha", Transform::Logit).with_boundary(0.0)],
        table.n(),
        ci_level,
    );
    let nll = |v: &[f64]| match ThipdParams::new(v[0], v[1]) {
        Ok(p) => -table.weighted_sum(|y| p.log_pmf(y)),
        Err(_) => f64::INFINITY,
    };
    let build = |v: &[f64]| Ok(CountModel::Thipd(ThipdParams::new(v[0], v[1])?));
    let p3 = (-mean).exp() * mean.powi(3) / 6.0;
    let starts = vec![vec![mean, inflated_starting_alpha(table, p3)], vec![mean, 0.05], vec![mean, 0.5]];
    fit_numeric(&problem, &nll, &starts, config, &build)
}
