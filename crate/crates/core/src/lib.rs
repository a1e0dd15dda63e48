//! Unit-Weibull ARMA models for rates and proportions on (0, 1).
//!
//! The conditional quantile of order `rho` follows an ARMA recursion on the
//! link scale. See `examples/` for end-to-end usage.

pub mod cli;
pub mod dist;
pub mod error;
pub mod fit;
pub mod forecast;
pub mod inference;
pub mod io;
pub mod link;
pub mod model;
pub mod optim;
pub mod rolling;
pub mod study;

pub use dist::UwParams;
pub use error::{Error, Result};
pub use fit::{backward_eliminate, fit_pmle, FitOptions, FitResult};
pub use forecast::{forecast_ahead, mape, ForecastResult};
pub use inference::{info_matrix, score, InfoMatrix};
pub use link::Link;
pub use model::{filter_series, simulate, ModelSpec, ParamVector, SeriesData, SimOptions, Simulation};
pub use study::{run_estimation_study, run_forecast_study, StudyConfig};
