//! Information criteria and side-by-side model comparison.

use serde::{Deserialize, Serialize};

use crate::data::FrequencyTable;
use crate::diagnostics::gof::chi_square_gof;
use crate::error::{Error, Result};
use crate::estimation::FitReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
}

/// `aic = 2k - 2ℓ`, `bic = k ln n - 2ℓ`.
pub fn information_criteria(log_likelihood: f64, k: usize, n: f64) -> Result<InformationCriteria> {
    if !(n >= 1.0) || k == 0 {
        return Err(Error::Precondition(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let k = k as f64;
    Ok(InformationCriteria { aic: 2.0 * k - 2.0 * log_likelihood, bic: k * n.ln() - 2.0 * log_likelihood })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model_name: String,
    pub neg_log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub chi_sq: Option<f64>,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub best_model: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub min_expected: f64,
    pub df_override: Option<u32>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { min_expected: crate::diagnostics::gof::DEFAULT_MIN_EXPECTED, df_override: None }
    }
}

/// One row per model, sorted by AIC; the first row is flagged best. The χ²
/// columns are empty when the binned table has too few cells.
pub fn compare_models(
    reports: &[FitReport],
    data: &FrequencyTable,
    options: &CompareOptions,
) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::Comparison(format!("need at least two fitted models, got {}", reports.len())));
    }
    if let Some(r) = reports.iter().find(|r| r.n != data.n()) {
        return Err(Error::Comparison(format!(
            "model {} was fitted to n = {} observations, data has n = {}",
            r.model_name,
            r.n,
            data.n()
        )));
    }
    let mut rows = reports
        .iter()
        .map(|r| {
            let pmf = |y: u64| r.model.pmf(y);
            let gof = match chi_square_gof(data, &pmf, r.k, options.min_expected, options.df_override) {
                Ok(g) => Some(g),
                Err(Error::InsufficientCells { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(ComparisonRow {
                model_name: r.model_name.clone(),
                neg_log_likelihood: -r.log_likelihood,
                aic: r.aic,
                bic: r.bic,
                chi_sq: gof.as_ref().map(|g| g.chi_sq),
                df: gof.as_ref().map(|g| g.df),
                p_value: gof.as_ref().map(|g| g.p_value),
                best: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    rows[0].best = true;
    let best_model = rows[0].model_name.clone();
    Ok(ComparisonTable { rows, best_model })
}
