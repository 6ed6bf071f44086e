//! Model adequacy: residuals, normality, goodness of fit and model ranking.

pub mod compare;
pub mod gof;
pub mod rqr;
pub mod shapiro;

pub use compare::{
    compare_models, information_criteria, CompareOptions, ComparisonRow, ComparisonTable, InformationCriteria,
};
pub use gof::{chi_square_gof, gof_bins, GofBin, GofResult, DEFAULT_MIN_EXPECTED};
pub use rqr::{model_residuals, randomized_quantile_residuals, RqrResult};
pub use shapiro::{shapiro_wilk, ShapiroWilk};
