//! Pearson chi-square goodness of fit for count models.

use serde::{Deserialize, Serialize};

use crate::data::FrequencyTable;
use crate::error::{Error, Result};
use crate::numkernel::chisq_sf;

pub const DEFAULT_MIN_EXPECTED: f64 = 5.0;

/// Cells `lower..=upper`; `upper = None` is the open tail `lower..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub lower: u64,
    pub upper: Option<u64>,
    pub observed: u64,
    pub expected: f64,
}

impl GofBin {
    pub fn label(&self) -> String {
        match self.upper {
            None => format!("{}+", self.lower),
            Some(u) if u == self.lower => u.to_string(),
            Some(u) => format!("{}-{}", self.lower, u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub bins: Vec<GofBin>,
    pub chi_sq: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Cells `0..=max` with the last one absorbing the tail mass, merged from the
/// right: cells are accumulated from the largest value downward and a group
/// closes once its expected count reaches `min_expected`. A short group left
/// at the low end joins its right neighbour.
pub fn gof_bins(observed: &FrequencyTable, model_pmf: &dyn Fn(u64) -> f64, min_expected: f64) -> Vec<GofBin> {
    let n = observed.n() as f64;
    let max = observed.max_value();
    let mut cells: Vec<GofBin> = (0..=max)
        .map(|v| GofBin { lower: v, upper: Some(v), observed: observed.count_of(v), expected: n * model_pmf(v) })
        .collect();
    let head: f64 = cells.iter().map(|c| c.expected).sum();
    if let Some(last) = cells.last_mut() {
        last.expected += (n - head).max(0.0);
        last.upper = None;
    }

    let mut groups: Vec<GofBin> = Vec::new();
    let mut current: Option<GofBin> = None;
    for cell in cells.into_iter().rev() {
        let group = match current.take() {
            None => cell,
            Some(g) => GofBin {
                lower: cell.lower,
                upper: g.upper,
                observed: g.observed + cell.observed,
                expected: g.expected + cell.expected,
            },
        };
        if group.expected >= min_expected {
            groups.push(group);
        } else {
            current = Some(group);
        }
    }
    if let Some(rest) = current {
        match groups.last_mut() {
            Some(right) => {
                right.lower = rest.lower;
                right.observed += rest.observed;
                right.expected += rest.expected;
            }
            None => groups.push(rest),
        }
    }
    groups.reverse();
    groups
}

pub fn chi_square_gof(
    observed: &FrequencyTable,
    model_pmf: &dyn Fn(u64) -> f64,
    fitted_params: usize,
    min_expected: f64,
    df_override: Option<u32>,
) -> Result<GofResult> {
    if observed.n() < 10 {
        return Err(Error::Precondition(format!(
            "chi-square test needs at least 10 observations, got {}",
            observed.n()
        )));
    }
    if !(min_expected > 0.0) {
        return Err(Error::Parameter(format!("min_expected must be positive, got {min_expected}")));
    }
    let bins = gof_bins(observed, model_pmf, min_expected);
    let needed = fitted_params + 2;
    if bins.len() < needed {
        return Err(Error::InsufficientCells { cells: bins.len(), needed });
    }
    let chi_sq = bins
        .iter()
        .map(|b| {
            let d = b.observed as f64 - b.expected;
            d * d / b.expected
        })
        .sum();
    let df = df_override.unwrap_or((bins.len() - 1 - fitted_params) as u32);
    if df == 0 {
        return Err(Error::Parameter("degrees of freedom must be positive".into()));
    }
    let p_value = chisq_sf(chi_sq, df)?;
    Ok(GofResult { bins, chi_sq, df, p_value })
}
