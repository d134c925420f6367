//! Heteroscedastic neural regression for surgery-case durations.
//!
//! The crate predicts a full predictive distribution (Gaussian, Laplace or
//! Gamma) for each case with a small dependency-free MLP, compares it with
//! point-prediction baselines, and turns the predicted distributions into
//! calibration diagnostics and over/under-booking trade-off curves.
//!
//! Module map:
//!
//! - [`numcore`]: dense matrices, the MLP, backpropagation and SGD.
//! - [`distributions`]: NLLs, their gradients, quantiles and special functions.
//! - [`features`]: surgery records and their dense encoding.
//! - [`data`]: CSV ingestion, filtering, splits and the synthetic generator.
//! - [`train`]: baselines, MLP training, constant-scale fitting and grid search.
//! - [`eval`]: metrics, calibration, QQ data, booking curves and ablation.
//! - [`cli`]: the `hetreg` command-line front end.

pub mod cli;
pub mod data;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod features;
pub mod numcore;
pub mod train;

pub use error::{Error, Result};
