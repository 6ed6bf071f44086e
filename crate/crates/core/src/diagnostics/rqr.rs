//! Randomized quantile residuals for discrete models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::shapiro::shapiro_wilk;
use crate::error::{Error, Result};
use crate::model::CountModel;
use crate::numkernel::normal_quantile;

const U_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RqrResult {
    pub residuals: Vec<f64>,
    /// Absent when there are fewer than 3 or more than 5000 residuals.
    pub shapiro_w: Option<f64>,
    pub shapiro_p: Option<f64>,
    pub seed: u64,
}

/// `cdf(i, y)` is the fitted cdf of observation `i` at `y`. Each residual is
/// `Φ⁻¹(u)` with `u` uniform on `(F(y-1), F(y)]`.
pub fn randomized_quantile_residuals(cdf: &dyn Fn(usize, i64) -> f64, sample: &[u64], seed: u64) -> Result<RqrResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(sample.len());
    for (i, &y) in sample.iter().enumerate() {
        let a = if y == 0 { 0.0 } else { cdf(i, y as i64 - 1) };
        let b = cdf(i, y as i64);
        // 1 - U lies in (0, 1].
        let v: f64 = 1.0 - rng.random::<f64>();
        let saturated = a == b && !(U_CLAMP..=1.0 - U_CLAMP).contains(&a);
        if !(b > a) && !saturated {
            return Err(Error::Internal(format!("empty cdf interval ({a}, {b}] at observation {i}, y = {y}")));
        }
        // A saturated interval lies entirely inside a clamped tail.
        let u = (a + v * (b - a)).clamp(U_CLAMP, 1.0 - U_CLAMP);
        residuals.push(normal_quantile(u)?);
    }
    let sw = if (3..=5000).contains(&residuals.len()) { shapiro_wilk(&residuals).ok() } else { None };
    Ok(RqrResult { residuals, shapiro_w: sw.map(|s| s.w), shapiro_p: sw.map(|s| s.p), seed })
}

/// Residuals for an i.i.d. sample under a single fitted model.
pub fn model_residuals(model: &CountModel, sample: &[u64], seed: u64) -> Result<RqrResult> {
    let max = sample.iter().copied().max().unwrap_or(0);
    let table = model.cdf_table(max);
    let cdf = |_: usize, y: i64| if y < 0 { 0.0 } else { table[y as usize] };
    randomized_quantile_residuals(&cdf, sample, seed)
}
