//! Predictive-distribution heads: Gaussian, Laplace and Gamma NLLs with
//! gradients through the output links, moments and quantiles, plus the
//! special functions they rely on.

mod dist;
mod nll;
pub mod special;

pub use dist::PredictiveDistribution;
pub use nll::{
    gamma_nll, gaussian_nll, laplace_nll, linked_params, nll_grad, Family, NllGrad, Objective, SCALE_FLOOR,
};
pub use special::{digamma, lgamma, reg_lower_incomplete_gamma, reg_upper_incomplete_gamma};
