//! A fitted count model of any supported family, behind one interface.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineSpec;
use crate::copoun::PcdParams;
use crate::inflated::{self, InflatedParams, ThipdParams};
use crate::pcd;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "parameters", rename_all = "snake_case")]
pub enum CountModel {
    Pcd(PcdParams),
    Thipcd(InflatedParams),
    Thipd(ThipdParams),
    Baseline(BaselineSpec),
}

impl CountModel {
    pub fn name(&self) -> &'static str {
        match self {
            CountModel::Pcd(_) => "pcd",
            CountModel::Thipcd(_) => "thipcd",
            CountModel::Thipd(_) => "thipd",
            CountModel::Baseline(spec) => spec.family().name(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            CountModel::Pcd(_) => 2,
            CountModel::Thipcd(_) => 3,
            CountModel::Thipd(_) => 2,
            CountModel::Baseline(spec) => spec.parameters().len(),
        }
    }

    pub fn log_pmf(&self, y: u64) -> f64 {
        match self {
            CountModel::Pcd(p) => pcd::log_pmf(p, y),
            CountModel::Thipcd(p) => inflated::thipcd_log_pmf(p, y),
            CountModel::Thipd(p) => p.log_pmf(y),
            CountModel::Baseline(spec) => spec.log_pmf(y),
        }
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.log_pmf(y).exp()
    }

    /// `P(Y <= y)` as a running pmf sum; zero for negative `y`.
    pub fn cdf(&self, y: i64) -> f64 {
        if y < 0 {
            return 0.0;
        }
        (0..=y as u64).map(|k| self.pmf(k)).sum::<f64>().min(1.0)
    }

    /// Cumulative probabilities `P(Y <= k)` for `k = 0..=max`.
    pub fn cdf_table(&self, max: u64) -> Vec<f64> {
        let mut total = 0.0;
        (0..=max)
            .map(|k| {
                total += self.pmf(k);
                total.min(1.0)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        match self {
            CountModel::Pcd(p) => pcd::mean(p),
            CountModel::Thipcd(p) => inflated::thipcd_moments(p).mean,
            CountModel::Thipd(p) => 3.0 * p.alpha() + (1.0 - p.alpha()) * p.lambda(),
            CountModel::Baseline(spec) => spec.mean(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            CountModel::Pcd(p) => pcd::draw(p, rng),
            CountModel::Thipcd(p) => inflated::thipcd_draw(p, rng),
            CountModel::Thipd(p) => p.draw(rng),
            CountModel::Baseline(spec) => spec.draw(rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

impl From<PcdParams> for CountModel {
    fn from(p: PcdParams) -> Self {
        CountModel::Pcd(p)
    }
}
