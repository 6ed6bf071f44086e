//! Estimation for univariate count samples: the method of moments for the
//! Poisson-Copoun law, and a shared maximum-likelihood engine that every
//! family uses. Fits run in unconstrained coordinates; standard errors come
//! from the inverse numeric Hessian mapped back by the delta method.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copoun::PcdParams;
use crate::data::FrequencyTable;
use crate::diagnostics::information_criteria;
use crate::error::{Error, Result};
use crate::model::CountModel;
use crate::numkernel::{inverse_spd, minimize, normal_quantile, numeric_hessian, OptimResult, OptimizerConfig};
use crate::pcd::{self, MeanParams};

/// Map between a natural parameter and the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Log,
    Logit,
}

const THETA_LIMIT: f64 = 30.0;
// Probabilities on the logit scale stop at 1 - 1e-8.
const LOGIT_UPPER: f64 = 18.420_680_733_952_23;
const BOUNDARY_THETA: f64 = 9.0;
const BOUNDARY_TOLERANCE: f64 = 1e-6;

impl Transform {
    pub fn to_unconstrained(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log => v.ln().clamp(-THETA_LIMIT, THETA_LIMIT),
            Transform::Logit => (v / (1.0 - v)).ln().clamp(-THETA_LIMIT, LOGIT_UPPER),
        }
    }

    pub fn to_natural(self, t: f64) -> f64 {
        match self {
            Transform::Identity => t,
            Transform::Log => t.clamp(-THETA_LIMIT, THETA_LIMIT).exp(),
            Transform::Logit => {
                let t = t.clamp(-THETA_LIMIT, LOGIT_UPPER);
                1.0 / (1.0 + (-t).exp())
            }
        }
    }

    /// `d natural / d θ` at the natural value `v`.
    pub fn jacobian(self, v: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Log => v,
            Transform::Logit => v * (1.0 - v),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ParamSpec {
    pub name: &'static str,
    pub transform: Transform,
    pub boundary: Option<f64>,
}

impl ParamSpec {
    pub fn new(name: &'static str, transform: Transform) -> Self {
        Self { name, transform, boundary: None }
    }

    /// The parameter may be estimated exactly at `value`, reached as the
    /// unconstrained coordinate runs to minus infinity.
    pub fn with_boundary(mut self, value: f64) -> Self {
        self.boundary = Some(value);
        self
    }
}

type DerivedFn = Box<dyn Fn(&[f64]) -> Vec<(String, f64)>>;

pub(crate) struct FitProblem {
    pub model_name: String,
    pub params: Vec<ParamSpec>,
    pub n: u64,
    pub ci_level: f64,
    pub method: &'static str,
    derived: Option<DerivedFn>,
}

impl FitProblem {
    pub fn new(model_name: &str, params: Vec<ParamSpec>, n: u64, ci_level: f64) -> Self {
        Self { model_name: model_name.to_string(), params, n, ci_level, method: "mle", derived: None }
    }

    pub fn with_derived(mut self, f: impl Fn(&[f64]) -> Vec<(String, f64)> + 'static) -> Self {
        self.derived = Some(Box::new(f));
        self
    }

    fn to_natural(&self, theta: &[f64]) -> Vec<f64> {
        self.params.iter().zip(theta).map(|(p, &t)| p.transform.to_natural(t)).collect()
    }

    fn to_unconstrained(&self, natural: &[f64]) -> Vec<f64> {
        self.params.iter().zip(natural).map(|(p, &v)| p.transform.to_unconstrained(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedValue {
    pub name: String,
    pub value: f64,
}

/// Result of fitting a count model to a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model_name: String,
    pub method: String,
    pub parameters: Vec<ParameterEstimate>,
    pub derived: Vec<DerivedValue>,
    pub ci_level: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: u64,
    pub k: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    pub model: CountModel,
}

impl FitReport {
    pub fn parameter(&self, name: &str) -> Option<&ParameterEstimate> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.parameter(name).map(|p| p.estimate)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.parameter(name).and_then(|p| p.std_error)
    }

    /// `n · pmf(y)` for `y = 0..=max`.
    pub fn expected_frequencies(&self, max: u64) -> Vec<f64> {
        (0..=max).map(|y| self.n as f64 * self.model.pmf(y)).collect()
    }
}

fn check_ci_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Builds the report at a known estimate. `fixed[i]` marks parameters held
/// at a boundary; they get no standard error.
#[allow(clippy::too_many_arguments)]
fn assemble_report(
    problem: &FitProblem,
    nll: &dyn Fn(&[f64]) -> f64,
    natural: &[f64],
    fixed: &[bool],
    converged: bool,
    iterations: usize,
    build: &dyn Fn(&[f64]) -> Result<CountModel>,
    mut warnings: Vec<String>,
) -> Result<FitReport> {
    check_ci_level(problem.ci_level)?;
    let k = problem.params.len();
    let free: Vec<usize> = (0..k).filter(|&i| !fixed[i]).collect();
    let value = nll(natural);
    if !value.is_finite() {
        return Err(Error::Evaluation { point: natural.to_vec() });
    }
    let log_likelihood = -value;

    let mut std_errors = vec![None; k];
    if !free.is_empty() {
        let theta_hat = problem.to_unconstrained(natural);
        let sub = |t: &[f64]| {
            let mut v = natural.to_vec();
            for (j, &i) in free.iter().enumerate() {
                v[i] = problem.params[i].transform.to_natural(t[j]);
            }
            nll(&v)
        };
        let t0: Vec<f64> = free.iter().map(|&i| theta_hat[i]).collect();
        match numeric_hessian(sub, &t0).and_then(|h| inverse_spd(&h)) {
            Ok(cov) => {
                for (j, &i) in free.iter().enumerate() {
                    let var = cov[(j, j)];
                    if var > 0.0 && var.is_finite() {
                        let jac = problem.params[i].transform.jacobian(natural[i]).abs();
                        std_errors[i] = Some(jac * var.sqrt());
                    }
                }
            }
            Err(_) => {
                warnings.push("observed information is not positive definite; standard errors unavailable".into())
            }
        }
    }

    let z = normal_quantile(0.5 + problem.ci_level / 2.0)?;
    let parameters = problem
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let se = std_errors[i];
            ParameterEstimate {
                name: p.name.to_string(),
                estimate: natural[i],
                std_error: se,
                ci_lower: se.map(|s| natural[i] - z * s),
                ci_upper: se.map(|s| natural[i] + z * s),
                at_boundary: fixed[i],
            }
        })
        .collect();
    for (i, p) in problem.params.iter().enumerate() {
        if fixed[i] {
            warnings
                .push(format!("{} estimated at the boundary value {}; no standard error reported", p.name, natural[i]));
        }
    }
    let derived = problem
        .derived
        .as_ref()
        .map(|f| f(natural).into_iter().map(|(name, value)| DerivedValue { name, value }).collect())
        .unwrap_or_default();
    if !converged {
        warnings.push("optimizer did not converge".into());
    }
    let ic = information_criteria(log_likelihood, k, problem.n as f64)?;
    Ok(FitReport {
        model_name: problem.model_name.clone(),
        method: problem.method.to_string(),
        parameters,
        derived,
        ci_level: problem.ci_level,
        log_likelihood,
        aic: ic.aic,
        bic: ic.bic,
        n: problem.n,
        k,
        converged,
        iterations,
        warnings,
        model: build(natural)?,
    })
}

/// Report for an estimate obtained without optimization.
pub(crate) fn report_at(
    problem: &FitProblem,
    nll: &dyn Fn(&[f64]) -> f64,
    natural: &[f64],
    converged: bool,
    iterations: usize,
    build: &dyn Fn(&[f64]) -> Result<CountModel>,
    warnings: Vec<String>,
) -> Result<FitReport> {
    let fixed = vec![false; problem.params.len()];
    assemble_report(problem, nll, natural, &fixed, converged, iterations, build, warnings)
}

/// Minimizes `nll` (a function of natural parameters) from each start and
/// reports the best optimum.
pub(crate) fn fit_numeric(
    problem: &FitProblem,
    nll: &dyn Fn(&[f64]) -> f64,
    starts: &[Vec<f64>],
    config: &OptimizerConfig,
    build: &dyn Fn(&[f64]) -> Result<CountModel>,
) -> Result<FitReport> {
    check_ci_level(problem.ci_level)?;
    let objective = |t: &[f64]| nll(&problem.to_natural(t));
    let mut best: Option<OptimResult> = None;
    let mut last_error = None;
    let mut iterations = 0;
    for start in starts {
        match minimize(objective, &problem.to_unconstrained(start), config) {
            Ok(r) => {
                iterations += r.iterations;
                if best.as_ref().is_none_or(|b: &OptimResult| r.min_value < b.min_value) {
                    best = Some(r);
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(last_error.unwrap_or_else(|| Error::Internal("no starting points".into()))),
    };

    let k = problem.params.len();
    let mut natural = problem.to_natural(&best.argmin);
    let mut value = best.min_value;
    let mut fixed = vec![false; k];
    for i in 0..k {
        let Some(b) = problem.params[i].boundary else { continue };
        if best.argmin[i] > -BOUNDARY_THETA {
            continue;
        }
        let mut trial = natural.clone();
        trial[i] = b;
        let v = nll(&trial);
        if v <= value + BOUNDARY_TOLERANCE {
            natural = trial;
            value = v.min(value);
            fixed[i] = true;
        }
    }
    let mut converged = best.converged;
    let free: Vec<usize> = (0..k).filter(|&i| !fixed[i]).collect();
    if fixed.iter().any(|&f| f) && !free.is_empty() {
        let base = natural.clone();
        let assemble = |t: &[f64]| {
            let mut v = base.clone();
            for (j, &i) in free.iter().enumerate() {
                v[i] = problem.params[i].transform.to_natural(t[j]);
            }
            v
        };
        let theta = problem.to_unconstrained(&natural);
        let t0: Vec<f64> = free.iter().map(|&i| theta[i]).collect();
        let r = minimize(|t: &[f64]| nll(&assemble(t)), &t0, config)?;
        iterations += r.iterations;
        if r.min_value <= value {
            natural = assemble(&r.argmin);
            converged = r.converged;
        }
    }
    assemble_report(problem, nll, &natural, &fixed, converged, iterations, build, Vec::new())
}

fn pcd_nll(table: &FrequencyTable) -> impl Fn(&[f64]) -> f64 + '_ {
    move |v: &[f64]| match PcdParams::new(v[0], v[1]) {
        Ok(p) => -table.weighted_sum(|y| pcd::log_pmf(&p, y)),
        Err(_) => f64::INFINITY,
    }
}

/// `Σ ln p(x)` over a sample held as a frequency table.
pub fn pcd_log_likelihood(params: &PcdParams, table: &FrequencyTable) -> f64 {
    table.weighted_sum(|y| pcd::log_pmf(params, y))
}

fn pcd_problem(n: u64, ci_level: f64) -> FitProblem {
    FitProblem::new(
        "pcd",
        vec![ParamSpec::new("eta", Transform::Log), ParamSpec::new("phi", Transform::Log).with_boundary(0.0)],
        n,
        ci_level,
    )
    .with_derived(|v| {
        let p = PcdParams::new(v[0], v[1]).expect("fitted parameters are valid");
        let m = pcd::moments(&p);
        vec![
            ("mean".to_string(), m.mean),
            ("variance".to_string(), m.variance),
            ("dispersion_index".to_string(), m.dispersion_index),
        ]
    })
}

fn pcd_build(v: &[f64]) -> Result<CountModel> {
    Ok(CountModel::Pcd(PcdParams::new(v[0], v[1])?))
}

/// Every exact solution `(η, φ)` of the two-moment system, '+' root first.
pub fn mom_candidates(m1: f64, m2: f64) -> Result<Vec<PcdParams>> {
    if !(m1 > 0.0) || !m1.is_finite() || !m2.is_finite() {
        return Err(Error::MomentInfeasible(format!("invalid sample moments m1 = {m1}, m2 = {m2}")));
    }
    let variance = m2 - m1 * m1;
    if !(variance > m1) {
        return Err(Error::MomentInfeasible(format!(
            "sample is not over-dispersed (variance {variance} <= mean {m1})"
        )));
    }
    let a = m2 - m1;
    let mut disc = 9.0 * m1 * m1 - 4.0 * a;
    if disc < 0.0 && disc > -1e-12 * 9.0 * m1 * m1 {
        disc = 0.0;
    }
    if disc < 0.0 {
        return Err(Error::MomentInfeasible(format!("negative discriminant {disc}")));
    }
    let root = disc.sqrt();
    let mut out = Vec::new();
    for eta in [(3.0 * m1 + root) / a, (3.0 * m1 - root) / a] {
        let denom = 4.0 - m1 * eta;
        if !(eta > 0.0) || !(denom > 0.0) {
            continue;
        }
        let mut phi = (m1 * eta * eta - eta) / denom;
        if phi < 0.0 && phi > -1e-12 * (1.0 + eta) {
            phi = 0.0;
        }
        if let Ok(p) = PcdParams::new(eta, phi) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::MomentOutsideSpace(format!("no root with eta > 0, phi >= 0 for m1 = {m1}, m2 = {m2}")));
    }
    Ok(out)
}

/// Method-of-moments estimate from the first two raw moments. Takes the '+'
/// root of the moment system, or the '-' root when the '+' root falls
/// outside the parameter space.
pub fn mom_from_moments(m1: f64, m2: f64) -> Result<PcdParams> {
    Ok(mom_candidates(m1, m2)?[0])
}

pub fn mom_fit_table(table: &FrequencyTable) -> Result<PcdParams> {
    if table.n() < 2 {
        return Err(Error::Precondition("at least two observations are required".into()));
    }
    if table.sample_variance() == 0.0 {
        return Err(Error::MomentInfeasible("sample variance is zero".into()));
    }
    mom_from_moments(table.raw_moment(1), table.raw_moment(2))
}

pub fn mom_fit(sample: &[u64]) -> Result<PcdParams> {
    if sample.len() < 2 {
        return Err(Error::Precondition("at least two observations are required".into()));
    }
    mom_fit_table(&FrequencyTable::from_values(sample)?)
}

/// Moment estimate of `η` when `φ` is known: the `η` whose mean is `x̄`.
pub fn mom_eta_fixed_phi(sample_mean: f64, phi: f64) -> Result<f64> {
    pcd::eta_from_mean(&MeanParams::new(sample_mean, phi)?)
}

/// Asymptotic variance `ν²` of `√n(η̂ - η)` for the fixed-`φ` moment
/// estimator, by the delta method.
pub fn mom_asymptotic_variance(params: &PcdParams) -> f64 {
    let (e, p) = (params.eta(), params.phi());
    let h_prime = -e * e * (e + p).powi(2) / (e * e + 8.0 * p * e + 4.0 * p * p);
    h_prime * h_prime * pcd::variance(params)
}

/// Report for the moment estimate: log-likelihood and criteria at the
/// estimate, no standard errors.
pub fn mom_report(table: &FrequencyTable, ci_level: f64) -> Result<FitReport> {
    let est = mom_fit_table(table)?;
    let mut problem = pcd_problem(table.n(), ci_level);
    problem.method = "mom";
    let nll = pcd_nll(table);
    check_ci_level(ci_level)?;
    let natural = [est.eta(), est.phi()];
    let mut report = report_at(&problem, &nll, &natural, true, 0, &pcd_build, Vec::new())?;
    for p in report.parameters.iter_mut() {
        p.std_error = None;
        p.ci_lower = None;
        p.ci_upper = None;
    }
    report.warnings.retain(|w| !w.contains("not positive definite"));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomEstimator {
    /// `η̂` from the sample mean with `φ` held at its true value.
    FixedPhi,
    /// `η̂` from the joint two-moment solution.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasExperiment {
    pub mean_eta_hat: f64,
    pub bias: f64,
    /// `n` times the Monte-Carlo variance of `η̂`.
    pub scaled_variance: f64,
    pub feasible: usize,
    pub infeasible: usize,
}

/// Monte-Carlo mean of the moment estimator `η̂`. Replication `i` draws from
/// stream `i` of a ChaCha8 generator seeded with `seed`; infeasible
/// replications are skipped and counted.
pub fn mom_bias_experiment(
    params: &PcdParams,
    n: usize,
    reps: usize,
    seed: u64,
    estimator: MomEstimator,
) -> Result<BiasExperiment> {
    if reps < 100 {
        return Err(Error::Precondition(format!("at least 100 replications are required, got {reps}")));
    }
    if n < 2 {
        return Err(Error::Precondition("sample size must be at least 2".into()));
    }
    let mut estimates = Vec::with_capacity(reps);
    let mut infeasible = 0;
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let sample = pcd::sample(params, &mut rng, n);
        let eta_hat = match estimator {
            MomEstimator::FixedPhi => {
                let mean = sample.iter().sum::<u64>() as f64 / n as f64;
                if mean > 0.0 {
                    mom_eta_fixed_phi(mean, params.phi()).ok()
                } else {
                    None
                }
            }
            MomEstimator::Joint => mom_fit(&sample).ok().map(|p| p.eta()),
        };
        match eta_hat {
            Some(e) => estimates.push(e),
            None => infeasible += 1,
        }
    }
    if infeasible * 2 > reps {
        return Err(Error::Precondition(format!(
            "{infeasible} of {reps} replications gave no feasible moment estimate"
        )));
    }
    let m = estimates.len() as f64;
    let mean_eta_hat = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|e| (e - mean_eta_hat).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(BiasExperiment {
        mean_eta_hat,
        bias: mean_eta_hat - params.eta(),
        scaled_variance: n as f64 * var,
        feasible: estimates.len(),
        infeasible,
    })
}

/// Maximum likelihood for the Poisson-Copoun law over `(ln η, ln φ)`.
/// Starts from the moment roots when feasible and from a small grid of
/// mean-matching points; the best optimum is kept.
pub fn mle_fit_table(table: &FrequencyTable, config: &OptimizerConfig, ci_level: f64) -> Result<FitReport> {
    if table.n() < 2 {
        return Err(Error::Precondition("at least two observations are required".into()));
    }
    let m1 = table.mean();
    if !(m1 > 0.0) {
        return Err(Error::Data("sample mean must be positive".into()));
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Ok(cands) = mom_candidates(m1, table.raw_moment(2)) {
        starts.extend(cands.iter().map(|p| vec![p.eta(), p.phi().max(1e-2)]));
    }
    starts.push(vec![1.0 / m1, 1.0]);
    for phi0 in [0.1, 5.0] {
        starts.push(vec![pcd::eta_from_mean(&MeanParams::new(m1, phi0)?)?, phi0]);
    }
    let nll = pcd_nll(table);
    fit_numeric(&pcd_problem(table.n(), ci_level), &nll, &starts, config, &pcd_build)
}

pub fn mle_fit(sample: &[u64], config: &OptimizerConfig) -> Result<FitReport> {
    if sample.len() < 2 {
        return Err(Error::Precondition("at least two observations are required".into()));
    }
    mle_fit_table(&FrequencyTable::from_values(sample)?, config, 0.95)
}
