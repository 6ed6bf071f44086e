//! Count data held as a frequency table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed frequency per nonnegative integer value, values strictly
/// increasing. Zero counts are allowed; the total must be positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    entries: Vec<(u64, u64)>,
    n: u64,
}

impl FrequencyTable {
    pub fn from_pairs(entries: Vec<(u64, u64)>) -> Result<Self> {
        if let Some(w) = entries.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::Data(format!("values must be strictly increasing, found {} after {}", w[1].0, w[0].0)));
        }
        let n = entries.iter().map(|e| e.1).sum();
        if n == 0 {
            return Err(Error::Data("frequency table has no observations".into()));
        }
        Ok(Self { entries, n })
    }

    pub fn from_values(values: &[u64]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_insert(0u64) += 1;
        }
        Self::from_pairs(counts.into_iter().collect())
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    /// Total number of observations.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count_of(&self, value: u64) -> u64 {
        self.entries.binary_search_by_key(&value, |e| e.0).map_or(0, |i| self.entries[i].1)
    }

    pub fn max_value(&self) -> u64 {
        self.entries.iter().rev().find(|e| e.1 > 0).map_or(0, |e| e.0)
    }

    /// Mean of `x^r` over the observations.
    pub fn raw_moment(&self, r: i32) -> f64 {
        self.weighted_sum(|v| (v as f64).powi(r)) / self.n as f64
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    /// Variance with divisor `n - 1`; zero for a single observation.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.weighted_sum(|v| (v as f64 - m).powi(2)) / (self.n - 1) as f64
    }

    /// `Σ count(v) · f(v)` over the nonzero cells.
    pub fn weighted_sum<F: FnMut(u64) -> f64>(&self, mut f: F) -> f64 {
        self.entries.iter().filter(|e| e.1 > 0).map(|&(v, c)| c as f64 * f(v)).sum()
    }

    /// The observations in increasing order.
    pub fn expand(&self) -> Vec<u64> {
        self.entries.iter().flat_map(|&(v, c)| std::iter::repeat_n(v, c as usize)).collect()
    }
}
