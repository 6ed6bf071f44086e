//! Log-link count regression: the mean-parametrized Poisson-Copoun model with
//! one global dispersion `φ`, plus Poisson and negative binomial baselines.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineSpec;
use crate::diagnostics::information_criteria;
use crate::error::{Error, Result};
use crate::model::CountModel;
use crate::numkernel::linalg::dot;
use crate::numkernel::{inverse_spd, minimize, normal_sf, numeric_hessian, Cholesky, Matrix, OptimizerConfig};
use crate::pcd::{self, MeanParams};

const MAX_LINEAR_PREDICTOR: f64 = 30.0;
const PENALTY: f64 = 1e100;
/// Smallest negative binomial `1/size`; below it the model is numerically
/// the Poisson limit.
const MIN_INVERSE_SIZE: f64 = 1e-8;
pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionData {
    response: Vec<u64>,
    design: Matrix,
    column_names: Vec<String>,
}

impl RegressionData {
    /// `design` must already contain the intercept column.
    pub fn new(response: Vec<u64>, design: Matrix, column_names: Vec<String>) -> Result<Self> {
        if response.len() != design.rows() {
            return Err(Error::Data(format!(
                "response has {} rows but the design has {}",
                response.len(),
                design.rows()
            )));
        }
        if column_names.len() != design.cols() {
            return Err(Error::Data("one name is required per design column".into()));
        }
        if design.cols() == 0 || design.rows() < design.cols() {
            return Err(Error::Data("design needs at least as many rows as columns".into()));
        }
        let gram = design.gram(None);
        let scale: Vec<f64> = gram.diagonal().iter().map(|d| d.sqrt()).collect();
        if scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Data("design has an all-zero column".into()));
        }
        let mut corr = gram.clone();
        for i in 0..corr.rows() {
            for j in 0..corr.cols() {
                corr[(i, j)] /= scale[i] * scale[j];
            }
        }
        // A huge diagonal of the inverse means a column is (nearly) a
        // combination of the others.
        let full_rank = Cholesky::new(&corr).is_ok_and(|c| c.inverse().diagonal().iter().all(|&d| d < 1e10));
        if !full_rank {
            return Err(Error::Data("design matrix is not of full column rank".into()));
        }
        Ok(Self { response, design, column_names })
    }

    /// Prepends an intercept column to the named covariates.
    pub fn with_intercept(response: Vec<u64>, covariates: &[(String, Vec<f64>)]) -> Result<Self> {
        let n = response.len();
        if let Some((name, _)) = covariates.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::Data(format!("covariate {name} has the wrong length")));
        }
        let cols = covariates.len() + 1;
        let mut data = Vec::with_capacity(n * cols);
        for i in 0..n {
            data.push(1.0);
            data.extend(covariates.iter().map(|(_, c)| c[i]));
        }
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(covariates.iter().map(|(nm, _)| nm.clone()));
        Self::new(response, Matrix::from_row_major(n, cols, data)?, names)
    }

    pub fn response(&self) -> &[u64] {
        &self.response
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.design.cols()
    }

    fn linear_predictor(&self, row: usize, beta: &[f64]) -> f64 {
        dot(self.design.row(row), beta)
    }
}

fn check_beta(data: &RegressionData, beta: &[f64]) -> Result<()> {
    if beta.len() != data.n_coefficients() {
        return Err(Error::Parameter(format!("expected {} coefficients, got {}", data.n_coefficients(), beta.len())));
    }
    Ok(())
}

fn row_mean(data: &RegressionData, row: usize, beta: &[f64]) -> Result<f64> {
    let mu = data.linear_predictor(row, beta).exp();
    if mu > 0.0 && mu.is_finite() {
        Ok(mu)
    } else {
        Err(Error::LinearPredictor { row })
    }
}

/// `Σ ln p(yᵢ; η(μᵢ, φ), φ)` with `μᵢ = exp(xᵢᵀβ)`.
pub fn pcd_regression_loglik(data: &RegressionData, beta: &[f64], phi: f64) -> Result<f64> {
    check_beta(data, beta)?;
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::Parameter(format!("phi must be positive and finite, got {phi}")));
    }
    let mut total = 0.0;
    for (i, &y) in data.response.iter().enumerate() {
        let mu = row_mean(data, i, beta)?;
        let params = MeanParams::new(mu, phi)?.to_natural().map_err(|_| Error::LinearPredictor { row: i })?;
        total += pcd::log_pmf(&params, y);
    }
    Ok(total)
}

/// The same log-likelihood written out in `μᵢ` and `Rᵢ = √((φμᵢ-1)² + 16φμᵢ)`
/// without forming `η`. Includes the constant `3 ln 2` per observation.
pub fn pcd_regression_loglik_expanded(data: &RegressionData, beta: &[f64], phi: f64) -> Result<f64> {
    check_beta(data, beta)?;
    let ln2 = std::f64::consts::LN_2;
    let mut total = 0.0;
    for (i, &y) in data.response.iter().enumerate() {
        let lp = data.linear_predictor(i, beta);
        let mu = row_mean(data, i, beta)?;
        let yf = y as f64;
        let r = ((phi * mu - 1.0).powi(2) + 16.0 * phi * mu).sqrt();
        let a = 1.0 - phi * mu + r;
        let c = (yf + 1.0) * (yf + 2.0) * (yf + 3.0);
        total += 2.0 * a.ln() + (yf + 3.0) * ln2 + yf * lp
            - 24f64.ln()
            - (yf + 4.0) * (2.0 * mu + a).ln()
            - (1.0 + phi * mu + r).ln()
            + (3.0 * (2.0 * mu + a).powi(3) + phi * mu * a * a * c).ln();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionFamily {
    Pcd,
    Poisson,
    NegativeBinomial,
}

impl RegressionFamily {
    pub fn name(self) -> &'static str {
        match self {
            RegressionFamily::Pcd => "pcd",
            RegressionFamily::Poisson => "poisson",
            RegressionFamily::NegativeBinomial => "negative_binomial",
        }
    }

    fn dispersion_name(self) -> Option<&'static str> {
        match self {
            RegressionFamily::Pcd => Some("phi"),
            RegressionFamily::Poisson => None,
            RegressionFamily::NegativeBinomial => Some("size"),
        }
    }

    /// The dispersion's working coordinate is `ln φ` for the Poisson-Copoun
    /// family and `size^(-1/2)` for the negative binomial, which puts the
    /// Poisson limit at the interior point zero.
    fn dispersion_from_working(self, w: f64) -> f64 {
        match self {
            RegressionFamily::NegativeBinomial => 1.0 / (w * w).max(MIN_INVERSE_SIZE),
            _ => w.exp(),
        }
    }

    fn dispersion_to_working(self, v: f64) -> f64 {
        match self {
            RegressionFamily::NegativeBinomial => 1.0 / v.sqrt(),
            _ => v.ln(),
        }
    }

    /// `|d dispersion / d w|` at `w`.
    fn dispersion_jacobian(self, w: f64) -> f64 {
        match self {
            RegressionFamily::NegativeBinomial => 2.0 / w.abs().powi(3),
            _ => w.exp(),
        }
    }

    fn row_model(self, mu: f64, dispersion: Option<f64>) -> Result<CountModel> {
        Ok(match (self, dispersion) {
            (RegressionFamily::Pcd, Some(phi)) => CountModel::Pcd(MeanParams::new(mu, phi)?.to_natural()?),
            (RegressionFamily::Poisson, _) => CountModel::Baseline(BaselineSpec::Poisson { lambda: mu }),
            (RegressionFamily::NegativeBinomial, Some(size)) => {
                CountModel::Baseline(BaselineSpec::NegativeBinomial { mean: mu, size })
            }
            _ => return Err(Error::Internal("dispersion missing for a two-part family".into())),
        })
    }
}

/// Negative log-likelihood in working coordinates: `β`, then `ln` of the
/// dispersion when the family has one. Large linear predictors are penalized.
fn working_nll(family: RegressionFamily, data: &RegressionData, w: &[f64]) -> f64 {
    let k = data.n_coefficients();
    let beta = &w[..k];
    let dispersion = family.dispersion_name().map(|_| family.dispersion_from_working(w[k]));
    let mut total = 0.0;
    for (i, &y) in data.response.iter().enumerate() {
        let lp = data.linear_predictor(i, beta);
        if !(lp.abs() <= MAX_LINEAR_PREDICTOR) {
            return PENALTY;
        }
        let mu = lp.exp();
        let lpmf = match family {
            RegressionFamily::Pcd => {
                let phi = dispersion.expect("pcd has a dispersion");
                match MeanParams::new(mu, phi).and_then(|m| m.to_natural()) {
                    Ok(params) => pcd::log_pmf(&params, y),
                    Err(_) => return PENALTY,
                }
            }
            RegressionFamily::Poisson => crate::baselines::poisson_log_pmf(mu, y),
            RegressionFamily::NegativeBinomial => {
                BaselineSpec::NegativeBinomial { mean: mu, size: dispersion.expect("nb has a size") }.log_pmf(y)
            }
        };
        total -= lpmf;
    }
    if total.is_finite() {
        total
    } else {
        PENALTY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z_value: Option<f64>,
    pub p_value: Option<f64>,
}

impl Coefficient {
    fn new(name: &str, estimate: f64, std_error: Option<f64>) -> Self {
        let z_value = std_error.map(|s| estimate / s);
        let p_value = z_value.map(|z| 2.0 * normal_sf(z.abs()));
        Self { name: name.to_string(), estimate, std_error, z_value, p_value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub family: RegressionFamily,
    pub coefficients: Vec<Coefficient>,
    pub dispersion: Option<Coefficient>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub k: usize,
    pub fitted_means: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl RegressionFit {
    pub fn beta(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// The fitted distribution of observation `row`.
    pub fn row_model(&self, row: usize) -> Result<CountModel> {
        let mu = *self.fitted_means.get(row).ok_or_else(|| Error::Parameter(format!("row {row} out of range")))?;
        self.family.row_model(mu, self.dispersion.as_ref().map(|d| d.estimate))
    }

    fn working_point(&self) -> Vec<f64> {
        let mut w = self.beta();
        if let Some(d) = &self.dispersion {
            w.push(self.family.dispersion_to_working(d.estimate));
        }
        w
    }
}

fn finish_fit(
    family: RegressionFamily,
    data: &RegressionData,
    w: &[f64],
    converged: bool,
    iterations: usize,
    mut warnings: Vec<String>,
) -> Result<RegressionFit> {
    let k = data.n_coefficients();
    let mut w = w.to_vec();
    if family == RegressionFamily::NegativeBinomial {
        w[k] = w[k].abs();
    }
    let at_size_limit = family == RegressionFamily::NegativeBinomial && w[k] * w[k] <= MIN_INVERSE_SIZE;
    if at_size_limit {
        w[k] = MIN_INVERSE_SIZE.sqrt();
        warnings.push("size reached its upper limit; the fit is the Poisson limit".into());
    }
    let w = w.as_slice();
    let beta = &w[..k];
    let nll = working_nll(family, data, w);
    if nll >= PENALTY {
        return Err(Error::Evaluation { point: w.to_vec() });
    }
    let mut se = vec![None; w.len()];
    // At the size limit the likelihood is flat in the size, so only the
    // coefficients get standard errors.
    let free = if at_size_limit { k } else { w.len() };
    let objective = |v: &[f64]| {
        let mut full = w.to_vec();
        full[..free].copy_from_slice(v);
        working_nll(family, data, &full)
    };
    match numeric_hessian(objective, &w[..free]).and_then(|h| inverse_spd(&h)) {
        Ok(cov) => {
            for (i, s) in se.iter_mut().take(free).enumerate() {
                let v = cov[(i, i)];
                if v > 0.0 && v.is_finite() {
                    *s = Some(v.sqrt());
                }
            }
        }
        Err(_) => warnings.push("observed information is not positive definite; standard errors unavailable".into()),
    }
    let coefficients =
        data.column_names.iter().zip(beta).zip(&se).map(|((name, &b), &s)| Coefficient::new(name, b, s)).collect();
    let dispersion = family.dispersion_name().map(|name| {
        let value = family.dispersion_from_working(w[k]);
        let s = se[k].map(|s| s * family.dispersion_jacobian(w[k]));
        let mut c = Coefficient::new(name, value, s);
        c.z_value = None;
        c.p_value = None;
        c
    });
    if let Some(d) = &dispersion {
        if d.estimate < 1e-6 {
            warnings.push(format!("{} is near its lower boundary", d.name));
        }
    }
    if !converged {
        warnings.push("optimizer did not converge".into());
    }
    let fitted_means = (0..data.n()).map(|i| data.linear_predictor(i, beta).exp()).collect();
    let n_params = w.len();
    let ic = information_criteria(-nll, n_params, data.n() as f64)?;
    Ok(RegressionFit {
        family,
        coefficients,
        dispersion,
        log_likelihood: -nll,
        aic: ic.aic,
        bic: ic.bic,
        n: data.n(),
        k: n_params,
        fitted_means,
        converged,
        iterations,
        warnings,
    })
}

fn require_rows(data: &RegressionData, extra: usize) -> Result<()> {
    if data.n() <= data.n_coefficients() + extra {
        return Err(Error::Precondition(format!(
            "need more than {} observations for {} coefficients",
            data.n_coefficients() + extra,
            data.n_coefficients()
        )));
    }
    Ok(())
}

/// Newton-Raphson on the Poisson log-likelihood, from `β₀ = ln ȳ` and zero
/// slopes. For the canonical log link the observed and expected information
/// coincide.
pub fn poisson_regression_fit(data: &RegressionData, config: &OptimizerConfig) -> Result<RegressionFit> {
    require_rows(data, 0)?;
    let n = data.n();
    let ybar = data.response.iter().sum::<u64>() as f64 / n as f64;
    if !(ybar > 0.0) {
        return Err(Error::Data("response mean must be positive".into()));
    }
    let k = data.n_coefficients();
    let mut beta = vec![0.0; k];
    if let Some(j) = data.column_names.iter().position(|c| c == INTERCEPT) {
        beta[j] = ybar.ln();
    }
    let mut converged = false;
    let mut iterations = 0;
    let max_iter = config.max_iterations.min(200);
    let mut current = working_nll(RegressionFamily::Poisson, data, &beta);
    while iterations < max_iter {
        iterations += 1;
        let mu: Vec<f64> = (0..n).map(|i| data.linear_predictor(i, &beta).exp()).collect();
        let resid: Vec<f64> = data.response.iter().zip(&mu).map(|(&y, m)| y as f64 - m).collect();
        let score = data.design.transpose().matvec(&resid);
        let info = data.design.gram(Some(&mu));
        let step = Cholesky::new(&info)?.solve(&score);
        // Step halving keeps every iterate an ascent step.
        let mut t = 1.0;
        let mut next;
        loop {
            next = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect::<Vec<f64>>();
            let v = working_nll(RegressionFamily::Poisson, data, &next);
            if v <= current || t < 1e-10 {
                current = v;
                break;
            }
            t *= 0.5;
        }
        let change = beta.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        if change < config.parameter_tolerance * 1e-2 || score.iter().all(|s| s.abs() < 1e-10 * n as f64) {
            converged = true;
            break;
        }
    }
    finish_fit(RegressionFamily::Poisson, data, &beta, converged, iterations, Vec::new())
}

fn nelder_mead_fit(
    family: RegressionFamily,
    data: &RegressionData,
    start: Vec<f64>,
    config: &OptimizerConfig,
    warm_iterations: usize,
) -> Result<RegressionFit> {
    let objective = |w: &[f64]| working_nll(family, data, w);
    let r = minimize(objective, &start, config)?;
    finish_fit(family, data, &r.argmin, r.converged, warm_iterations + r.iterations, Vec::new())
}

/// Maximum likelihood over `(β, ln φ)`, started from the Poisson regression
/// estimate and `φ = 1`.
pub fn pcd_regression_fit(data: &RegressionData, config: &OptimizerConfig) -> Result<RegressionFit> {
    require_rows(data, 1)?;
    let warm = poisson_regression_fit(data, config)?;
    let mut start = warm.beta();
    start.push(0.0);
    nelder_mead_fit(RegressionFamily::Pcd, data, start, config, warm.iterations)
}

/// Log-link negative binomial with free size, started from the Poisson fit.
pub fn nb_regression_fit(data: &RegressionData, config: &OptimizerConfig) -> Result<RegressionFit> {
    require_rows(data, 1)?;
    let warm = poisson_regression_fit(data, config)?;
    // Moment estimate of the size from Poisson residuals.
    let excess: f64 = data
        .response
        .iter()
        .zip(&warm.fitted_means)
        .map(|(&y, m)| ((y as f64 - m).powi(2) - y as f64) / (m * m))
        .sum::<f64>()
        / data.n() as f64;
    let size0 = if excess > 1e-3 { 1.0 / excess } else { 100.0 };
    let mut start = warm.beta();
    start.push(RegressionFamily::NegativeBinomial.dispersion_to_working(size0));
    nelder_mead_fit(RegressionFamily::NegativeBinomial, data, start, config, warm.iterations)
}

pub fn regression_fit(
    family: RegressionFamily,
    data: &RegressionData,
    config: &OptimizerConfig,
) -> Result<RegressionFit> {
    match family {
        RegressionFamily::Pcd => pcd_regression_fit(data, config),
        RegressionFamily::Poisson => poisson_regression_fit(data, config),
        RegressionFamily::NegativeBinomial => nb_regression_fit(data, config),
    }
}

/// Draws one response per design row from the mean-parametrized model with
/// `μᵢ = exp(xᵢᵀβ)` and dispersion `phi`.
pub fn simulate_pcd_response<R: Rng + ?Sized>(
    design: &Matrix,
    beta: &[f64],
    phi: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if beta.len() != design.cols() {
        return Err(Error::Parameter(format!("expected {} coefficients, got {}", design.cols(), beta.len())));
    }
    (0..design.rows())
        .map(|i| {
            let mu = dot(design.row(i), beta).exp();
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::LinearPredictor { row: i });
            }
            let params = MeanParams::new(mu, phi)?.to_natural()?;
            Ok(pcd::draw(&params, rng))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub value: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTrace {
    pub parameter: String,
    pub points: Vec<ProfilePoint>,
}

/// Profile log-likelihood of every parameter on `points` equally spaced
/// values spanning the estimate ± 3 standard errors; the other parameters
/// are re-maximized at each value. The dispersion is profiled on its natural
/// scale and its grid is kept positive.
pub fn profile_log_likelihood(
    data: &RegressionData,
    fit: &RegressionFit,
    config: &OptimizerConfig,
    points: usize,
) -> Result<Vec<ProfileTrace>> {
    if points < 2 {
        return Err(Error::Parameter("a profile needs at least two points".into()));
    }
    let family = fit.family;
    let w_hat = fit.working_point();
    let k = data.n_coefficients();
    let mut named: Vec<&Coefficient> = fit.coefficients.iter().collect();
    if let Some(d) = &fit.dispersion {
        named.push(d);
    }
    let mut traces = Vec::new();
    for (j, coef) in named.iter().enumerate() {
        let Some(se) = coef.std_error else { continue };
        let mut grid: Vec<f64> =
            (0..points).map(|p| coef.estimate + se * (-3.0 + 6.0 * p as f64 / (points - 1) as f64)).collect();
        if j == k {
            grid.retain(|&v| v > 0.0);
        }
        let mut out = Vec::with_capacity(grid.len());
        for value in grid {
            let fixed = if j == k { family.dispersion_to_working(value) } else { value };
            let assemble = |free: &[f64]| {
                let mut w = Vec::with_capacity(w_hat.len());
                w.extend_from_slice(&free[..j]);
                w.push(fixed);
                w.extend_from_slice(&free[j..]);
                w
            };
            let start: Vec<f64> = w_hat.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
            let ll = if start.is_empty() {
                -working_nll(family, data, &[fixed])
            } else {
                -minimize(|free: &[f64]| working_nll(family, data, &assemble(free)), &start, config)?.min_value
            };
            out.push(ProfilePoint { value, log_likelihood: ll });
        }
        traces.push(ProfileTrace { parameter: coef.name.clone(), points: out });
    }
    Ok(traces)
}
