//! Shared numerical routines used by every fitter.

pub mod diff;
pub mod linalg;
pub mod optimize;
pub mod special;

pub use diff::{numeric_gradient, numeric_hessian};
pub use linalg::{inverse_spd, solve_spd, Cholesky, Matrix};
pub use optimize::{minimize, minimize_from_simplex, OptimResult, OptimizerConfig};
pub use special::{chisq_sf, gamma_p, gamma_q, ln_gamma, normal_cdf, normal_pdf, normal_quantile, normal_sf};
