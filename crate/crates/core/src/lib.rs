//! Count-data modelling with the Poisson-Copoun family: distribution
//! functions, moment and likelihood estimation, a three-inflated variant,
//! log-link regression, baseline families and fit diagnostics.

pub mod baselines;
pub mod copoun;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod inflated;
pub mod model;
pub mod numkernel;
pub mod pcd;
pub mod regression;

pub use copoun::PcdParams;
pub use data::FrequencyTable;
pub use error::{Error, Result};
pub use estimation::FitReport;
pub use inflated::{InflatedParams, ThipdParams};
pub use model::CountModel;
pub use pcd::MeanParams;
