//! Critical values for max statistics of high-dimensional sample means.
//!
//! The crate computes the statistic `T_n = max_j n^{-1/2} sum_i (X_ij - mu_j + t_j)`
//! and approximates its `(1 - alpha)` quantile with the empirical bootstrap or a
//! multiplier bootstrap (Gaussian, Rademacher, third-order matching or Beta-based
//! weights). On top of that sit a Monte Carlo harness for rejection probabilities
//! under Gaussian-copula designs and a small lab of exact-enumeration checks for
//! the randomized Lindeberg interpolation and the exchangeable tail inequality.
//!
//! Modules:
//!
//! - [`stats`]: sample matrices, the max statistic, quantiles and covariance.
//! - [`distributions`]: RNG streams, multiplier weights, special functions, AR(1) rows.
//! - [`bootstrap`]: bootstrap draws, critical values, exact enumeration, decisions.
//! - [`lindeberg`]: randomized Lindeberg interpolation and exchangeable tail checks.
//! - [`sim`]: simulation designs, rejection estimates and the batch driver.

pub mod bootstrap;
pub mod distributions;
mod error;
pub mod format;
pub mod lindeberg;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
