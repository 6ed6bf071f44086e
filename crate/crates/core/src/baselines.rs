//! Comparison families: Poisson, geometric, negative binomial and
//! zero-inflated Poisson.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Geometric};
use serde::{Deserialize, Serialize};

use crate::data::FrequencyTable;
use crate::error::{Error, Result};
use crate::estimation::{fit_numeric, report_at, FitProblem, FitReport, ParamSpec, Transform};
use crate::model::CountModel;
use crate::numkernel::special::{lgamma, ln_factorial};
use crate::numkernel::OptimizerConfig;
use crate::pcd::poisson_draw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    Geometric,
    NegativeBinomial,
    Zip,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Geometric => "geometric",
            Family::NegativeBinomial => "negative_binomial",
            Family::Zip => "zip",
        }
    }
}

/// A baseline family with its parameter values. The negative binomial is
/// parametrized by mean and size (dispersion); its success probability is
/// `size / (size + mean)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaselineSpec {
    Poisson { lambda: f64 },
    Geometric { p: f64 },
    NegativeBinomial { mean: f64, size: f64 },
    Zip { lambda: f64, alpha: f64 },
}

pub(crate) fn poisson_log_pmf(lambda: f64, y: u64) -> f64 {
    if lambda == 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + y as f64 * lambda.ln() - ln_factorial(y)
}

fn nb_log_pmf(mean: f64, size: f64, y: u64) -> f64 {
    let yf = y as f64;
    let tail = -ln_factorial(y) - size * (mean / size).ln_1p() + yf * mean.ln();
    if y <= 1000 {
        // ln Γ(y+size) - ln Γ(size) - y ln(size+mean) as a short sum, which
        // stays accurate at large sizes.
        let total = size + mean;
        (0..y).map(|j| ((j as f64 - mean) / total).ln_1p()).sum::<f64>() + tail
    } else {
        lgamma(yf + size) - lgamma(size) - yf * (size + mean).ln() + tail
    }
}

impl BaselineSpec {
    pub fn family(&self) -> Family {
        match self {
            BaselineSpec::Poisson { .. } => Family::Poisson,
            BaselineSpec::Geometric { .. } => Family::Geometric,
            BaselineSpec::NegativeBinomial { .. } => Family::NegativeBinomial,
            BaselineSpec::Zip { .. } => Family::Zip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            BaselineSpec::Poisson { lambda } => positive("lambda", lambda),
            BaselineSpec::Geometric { p } => {
                if p > 0.0 && p < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("p must lie in (0, 1), got {p}")))
                }
            }
            BaselineSpec::NegativeBinomial { mean, size } => {
                positive("mean", mean)?;
                positive("size", size)
            }
            BaselineSpec::Zip { lambda, alpha } => {
                positive("lambda", lambda)?;
                if (0.0..1.0).contains(&alpha) {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("alpha must lie in [0, 1), got {alpha}")))
                }
            }
        }
    }

    /// Log-pmf without parameter validation.
    pub fn log_pmf(&self, y: u64) -> f64 {
        match *self {
            BaselineSpec::Poisson { lambda } => poisson_log_pmf(lambda, y),
            BaselineSpec::Geometric { p } => p.ln() + y as f64 * (-p).ln_1p(),
            BaselineSpec::NegativeBinomial { mean, size } => nb_log_pmf(mean, size, y),
            BaselineSpec::Zip { lambda, alpha } => {
                if y == 0 {
                    (alpha + (1.0 - alpha) * (-lambda).exp()).ln()
                } else {
                    (-alpha).ln_1p() + poisson_log_pmf(lambda, y)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            BaselineSpec::Poisson { lambda } => lambda,
            BaselineSpec::Geometric { p } => (1.0 - p) / p,
            BaselineSpec::NegativeBinomial { mean, .. } => mean,
            BaselineSpec::Zip { lambda, alpha } => (1.0 - alpha) * lambda,
        }
    }

    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        match *self {
            BaselineSpec::Poisson { lambda } => vec![("lambda", lambda)],
            BaselineSpec::Geometric { p } => vec![("p", p)],
            BaselineSpec::NegativeBinomial { mean, size } => vec![("mean", mean), ("size", size)],
            BaselineSpec::Zip { lambda, alpha } => vec![("lambda", lambda), ("alpha", alpha)],
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            BaselineSpec::Poisson { lambda } => poisson_draw(rng, lambda),
            BaselineSpec::Geometric { p } => Geometric::new(p).map_or(0, |g| g.sample(rng)),
            BaselineSpec::NegativeBinomial { mean, size } => {
                let rate = Gamma::new(size, mean / size).map_or(0.0, |g| g.sample(rng));
                poisson_draw(rng, rate)
            }
            BaselineSpec::Zip { lambda, alpha } => {
                let u: f64 = rng.random();
                if u < alpha {
                    0
                } else {
                    poisson_draw(rng, lambda)
                }
            }
        }
    }
}

pub fn baseline_log_pmf(spec: &BaselineSpec, y: u64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.log_pmf(y))
}

fn table_nll(table: &FrequencyTable, spec: BaselineSpec) -> f64 {
    -table.weighted_sum(|y| spec.log_pmf(y))
}

/// Maximum likelihood for a baseline family. Poisson and geometric have
/// closed-form estimates; the other two are optimized numerically.
pub fn baseline_mle(
    family: Family,
    table: &FrequencyTable,
    config: &OptimizerConfig,
    ci_level: f64,
) -> Result<FitReport> {
    if table.n() < 2 {
        return Err(Error::Precondition("at least two observations are required".into()));
    }
    let mean = table.mean();
    if !(mean > 0.0) {
        return Err(Error::Data("sample mean must be positive".into()));
    }
    match family {
        Family::Poisson => {
            let problem =
                FitProblem::new("poisson", vec![ParamSpec::new("lambda", Transform::Log)], table.n(), ci_level);
            let build = |v: &[f64]| Ok(CountModel::Baseline(BaselineSpec::Poisson { lambda: v[0] }));
            let nll = |v: &[f64]| table_nll(table, BaselineSpec::Poisson { lambda: v[0] });
            report_at(&problem, &nll, &[mean], true, 0, &build, Vec::new())
        }
        Family::Geometric => {
            let problem =
                FitProblem::new("geometric", vec![ParamSpec::new("p", Transform::Logit)], table.n(), ci_level);
            let build = |v: &[f64]| Ok(CountModel::Baseline(BaselineSpec::Geometric { p: v[0] }));
            let nll = |v: &[f64]| table_nll(table, BaselineSpec::Geometric { p: v[0] });
            report_at(&problem, &nll, &[1.0 / (1.0 + mean)], true, 0, &build, Vec::new())
        }
        Family::NegativeBinomial => {
            let problem = FitProblem::new(
                "negative_binomial",
                vec![ParamSpec::new("mean", Transform::Log), ParamSpec::new("size", Transform::Log)],
                table.n(),
                ci_level,
            )
            .with_derived(|v| vec![("prob".to_string(), v[1] / (v[1] + v[0]))]);
            let build = |v: &[f64]| Ok(CountModel::Baseline(BaselineSpec::NegativeBinomial { mean: v[0], size: v[1] }));
            let nll = |v: &[f64]| table_nll(table, BaselineSpec::NegativeBinomial { mean: v[0], size: v[1] });
            let excess = table.sample_variance() - mean;
            let mut starts = vec![vec![mean, 1.0], vec![mean, 10.0]];
            if excess > 0.0 {
                starts.insert(0, vec![mean, mean * mean / excess]);
            }
            fit_numeric(&problem, &nll, &starts, config, &build)
        }
        Family::Zip => {
            let problem = FitProblem::new(
                "zip",
                vec![
                    ParamSpec::new("lambda", Transform::Log),
                    ParamSpec::new("alpha", Transform::Logit).with_boundary(0.0),
                ],
                table.n(),
                ci_level,
            );
            let build = |v: &[f64]| Ok(CountModel::Baseline(BaselineSpec::Zip { lambda: v[0], alpha: v[1] }));
            let nll = |v: &[f64]| table_nll(table, BaselineSpec::Zip { lambda: v[0], alpha: v[1] });
            let zero_share = table.count_of(0) as f64 / table.n() as f64;
            let excess_zero = (zero_share - (-mean).exp()).clamp(0.01, 0.9);
            let starts = vec![vec![mean / (1.0 - excess_zero), excess_zero], vec![mean, 0.05], vec![mean * 2.0, 0.5]];
            fit_numeric(&problem, &nll, &starts, config, &build)
        }
    }
}
