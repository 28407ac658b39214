//! Calibrated confidence intervals for short-term traffic flow forecasts.
//!
//! The crate bundles:
//! - a data pipeline turning 15-minute sensor series into standardized,
//!   split, supervised datasets ([`data`]);
//! - self-contained tree-ensemble regressors and a small MLP ([`regressors`],
//!   [`neural`]);
//! - five interval estimators behind one interface: split conformal
//!   prediction, ensemble percentiles, dual quantile regression, MC dropout
//!   and a heteroscedastic Gaussian head ([`uncertainty`]);
//! - interval-quality metrics (MIL, ICP, RMIL, calibration curves) and a
//!   streaming coverage-drift monitor ([`metrics`]);
//! - a deterministic benchmark runner over a scenario grid ([`bench`]).

pub mod bench;
pub mod data;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod neural;
pub mod regressors;
pub mod seeding;
pub mod uncertainty;

pub use error::{Error, Result};
pub use matrix::Matrix;
