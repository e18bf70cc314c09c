//! Forecasting engine and backtesting harness for hourly day-ahead
//! electricity prices.
//!
//! Eight linear model families are supported: univariate AR/ARX and their
//! Bayesian counterparts, and multivariate VAR/VARX/BVAR/BVARX models over the
//! 24-hour price vector. Forecasts are produced one day ahead on a rolling
//! window and scored with RMSE, CRPS, Diebold-Mariano tests and the Model
//! Confidence Set.

pub mod error;
pub mod backtest;
pub mod design;
pub mod estimate;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod run;
pub mod seed;
pub mod synthetic;
mod linalg;
mod tomldate;

pub use error::{Error, Result};
