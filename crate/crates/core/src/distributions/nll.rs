use serde::{Deserialize, Serialize};

use super::special::{digamma, lgamma};
use crate::error::{Error, Result};
use crate::numcore::{softplus, softplus_grad};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Lower bound (hours, or unitless shape) applied to every softplus-linked
/// head output before it enters an NLL.
pub const SCALE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Laplace,
    Gamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Laplace => "laplace",
            Family::Gamma => "gamma",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "laplace" => Ok(Family::Laplace),
            "gamma" => Ok(Family::Gamma),
            other => Err(Error::config("family", format!("unknown family `{other}`"))),
        }
    }
}

/// `½ln(2π) + ln σ + (y−μ)²/(2σ²)`
pub fn gaussian_nll(y: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::domain(
            "gaussian_nll",
            format!("sigma must be positive, got {sigma}"),
        ));
    }
    let r = (y - mu) / sigma;
    Ok(LN_SQRT_2PI + sigma.ln() + 0.5 * r * r)
}

/// `ln(2b) + |y−μ|/b`
pub fn laplace_nll(y: f64, mu: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain(
            "laplace_nll",
            format!("b must be positive, got {b}"),
        ));
    }
    Ok((2.0 * b).ln() + (y - mu).abs() / b)
}

/// `ln Γ(k) + k ln Φ − (k−1) ln y + y/Φ`
pub fn gamma_nll(y: f64, k: f64, phi: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::domain(
            "gamma_nll",
            format!("label {y} lies outside the gamma support (y > 0)"),
        ));
    }
    if !(k > 0.0 && phi > 0.0) {
        return Err(Error::domain(
            "gamma_nll",
            format!("k={k}, phi={phi} must be positive"),
        ));
    }
    Ok(lgamma(k)? + k * phi.ln() - (k - 1.0) * y.ln() + y / phi)
}

/// Softplus link followed by the positivity floor; returns the value and its
/// derivative with respect to the raw output (zero where the floor binds).
#[inline]
fn positive_link(z: f64) -> (f64, f64) {
    let v = softplus(z);
    if v < SCALE_FLOOR {
        (SCALE_FLOOR, 0.0)
    } else {
        (v, softplus_grad(z))
    }
}

/// Distribution parameters from raw two-output head values.
pub fn linked_params(family: Family, raw: &[f64]) -> (f64, f64) {
    match family {
        Family::Gaussian | Family::Laplace => (raw[0], positive_link(raw[1]).0),
        Family::Gamma => (positive_link(raw[0]).0, positive_link(raw[1]).0),
    }
}

/// Per-case objective value and its derivative with respect to each raw
/// (pre-link) head output. Only the first `outputs` entries of `d_raw` are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NllGrad {
    pub value: f64,
    pub d_raw: [f64; 2],
}

/// NLL of a heteroscedastic head and its gradient through the links.
pub fn nll_grad(family: Family, y: f64, raw: &[f64]) -> Result<NllGrad> {
    if raw.len() != 2 || !raw.iter().all(|v| v.is_finite()) {
        return Err(Error::domain(
            "nll_grad",
            format!("expected two finite raw outputs, got {raw:?}"),
        ));
    }
    match family {
        Family::Gaussian => {
            let mu = raw[0];
            let (sigma, ds) = positive_link(raw[1]);
            let value = gaussian_nll(y, mu, sigma)?;
            let r = y - mu;
            let s2 = sigma * sigma;
            let d_mu = -r / s2;
            let d_sigma = 1.0 / sigma - r * r / (s2 * sigma);
            Ok(NllGrad {
                value,
                d_raw: [d_mu, d_sigma * ds],
            })
        }
        Family::Laplace => {
            let mu = raw[0];
            let (b, db) = positive_link(raw[1]);
            let value = laplace_nll(y, mu, b)?;
            let r = y - mu;
            let sign = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            let d_mu = -sign / b;
            let d_b = 1.0 / b - r.abs() / (b * b);
            Ok(NllGrad {
                value,
                d_raw: [d_mu, d_b * db],
            })
        }
        Family::Gamma => {
            let (k, dk) = positive_link(raw[0]);
            let (phi, dphi) = positive_link(raw[1]);
            let value = gamma_nll(y, k, phi)?;
            let d_k = digamma(k)? + phi.ln() - y.ln();
            let d_phi = k / phi - y / (phi * phi);
            Ok(NllGrad {
                value,
                d_raw: [d_k * dk, d_phi * dphi],
            })
        }
    }
}

/// Training objective for one head configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Full NLL of a two-output heteroscedastic head.
    Nll(Family),
    /// `(ŷ − y)²`, the fixed-scale Gaussian argmin.
    SquaredError,
    /// `|ŷ − y|`, the fixed-scale Laplace argmin.
    AbsoluteError,
}

impl Objective {
    pub fn outputs(self) -> usize {
        match self {
            Objective::Nll(_) => 2,
            Objective::SquaredError | Objective::AbsoluteError => 1,
        }
    }

    pub fn loss_grad(self, y: f64, raw: &[f64]) -> Result<NllGrad> {
        match self {
            Objective::Nll(f) => nll_grad(f, y, raw),
            Objective::SquaredError => {
                let r = raw[0] - y;
                Ok(NllGrad {
                    value: r * r,
                    d_raw: [2.0 * r, 0.0],
                })
            }
            Objective::AbsoluteError => {
                let r = raw[0] - y;
                let s = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                Ok(NllGrad {
                    value: r.abs(),
                    d_raw: [s, 0.0],
                })
            }
        }
    }
}
