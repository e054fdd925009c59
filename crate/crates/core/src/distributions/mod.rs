//! Random-number families and quantile/CDF kernels.
//!
//! - [`RngStream`]: reproducible `(seed, stream id)` generators.
//! - [`WeightFamily`]: multiplier-bootstrap weight distributions.
//! - [`std_normal_cdf`], [`weibull_quantile`], [`gamma_quantile`]: marginal kernels.
//! - [`gen_ar1_gaussian_rows`]: Gaussian rows with covariance `rho^{|j-k|}`.

mod ar1;
mod rng;
mod special;
mod weights;

pub use ar1::{fill_ar1_row, gen_ar1_gaussian_rows};
pub use rng::{RngStream, StreamRng};
pub use special::{
    gamma_mean, gamma_quantile, gamma_quantile_tails, regularized_gamma_p, regularized_gamma_pq,
    std_normal_cdf, std_normal_quantile, weibull_mean, weibull_quantile, weibull_quantile_tails,
};
pub use weights::{
    sample_weight, third_order_params, ThirdOrderParams, WeightFamily, WeightSampler,
    THIRD_ORDER_GAMMA_MAX,
};
