use serde::{Deserialize, Serialize};

use super::nll::{gamma_nll, gaussian_nll, laplace_nll, linked_params, Family};
use super::special::{gamma_quantile_unit, normal_cdf, probit, reg_lower_incomplete_gamma};
use crate::error::{Error, Result};

/// Predictive distribution over a case duration, in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PredictiveDistribution {
    Gaussian { mu: f64, sigma: f64 },
    Laplace { mu: f64, b: f64 },
    Gamma { k: f64, phi: f64 },
}

fn check(func: &'static str, loc: f64, scales: &[f64]) -> Result<()> {
    if !loc.is_finite() || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::domain(
            func,
            format!("invalid parameters {loc}, {scales:?}"),
        ));
    }
    Ok(())
}

impl PredictiveDistribution {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        check("gaussian", mu, &[sigma])?;
        Ok(Self::Gaussian { mu, sigma })
    }

    pub fn laplace(mu: f64, b: f64) -> Result<Self> {
        check("laplace", mu, &[b])?;
        Ok(Self::Laplace { mu, b })
    }

    pub fn gamma(k: f64, phi: f64) -> Result<Self> {
        check("gamma", 0.0, &[k, phi])?;
        Ok(Self::Gamma { k, phi })
    }

    /// Build from raw two-output head values (links and floor applied).
    pub fn from_raw(family: Family, raw: &[f64]) -> Result<Self> {
        let (a, b) = linked_params(family, raw);
        match family {
            Family::Gaussian => Self::gaussian(a, b),
            Family::Laplace => Self::laplace(a, b),
            Family::Gamma => Self::gamma(a, b),
        }
    }

    /// Location-scale distribution around a point prediction with a fixed scale.
    pub fn with_constant_scale(family: Family, point: f64, scale: f64) -> Result<Self> {
        match family {
            Family::Gaussian => Self::gaussian(point, scale),
            Family::Laplace => Self::laplace(point, scale),
            Family::Gamma => Err(Error::config(
                "family",
                "gamma has no constant-scale (homoscedastic) form",
            )),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Gaussian { .. } => Family::Gaussian,
            Self::Laplace { .. } => Family::Laplace,
            Self::Gamma { .. } => Family::Gamma,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mu, .. } | Self::Laplace { mu, .. } => mu,
            Self::Gamma { k, phi } => k * phi,
        }
    }

    pub fn median(&self) -> Result<f64> {
        match *self {
            Self::Gaussian { mu, .. } | Self::Laplace { mu, .. } => Ok(mu),
            Self::Gamma { .. } => self.quantile(0.5),
        }
    }

    /// Standard deviation: σ, √2·b, or √k·Φ.
    pub fn std_dev(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma, .. } => sigma,
            Self::Laplace { b, .. } => std::f64::consts::SQRT_2 * b,
            Self::Gamma { k, phi } => k.sqrt() * phi,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { mu, sigma } => normal_cdf((x - mu) / sigma),
            Self::Laplace { mu, b } => {
                if x < mu {
                    0.5 * ((x - mu) / b).exp()
                } else {
                    1.0 - 0.5 * (-(x - mu) / b).exp()
                }
            }
            Self::Gamma { k, phi } => {
                if x <= 0.0 {
                    0.0
                } else {
                    reg_lower_incomplete_gamma(k, x / phi).unwrap_or(1.0)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(
                "quantile",
                format!("p must lie in (0, 1), got {p}"),
            ));
        }
        match *self {
            Self::Gaussian { mu, sigma } => Ok(mu + sigma * probit(p)?),
            Self::Laplace { mu, b } => Ok(if p < 0.5 {
                mu + b * (2.0 * p).ln()
            } else {
                mu - b * (2.0 * (1.0 - p)).ln()
            }),
            Self::Gamma { k, phi } => Ok(phi * gamma_quantile_unit(k, p)?),
        }
    }

    /// Negative log density at `y`, in nats on the hours scale.
    pub fn nll(&self, y: f64) -> Result<f64> {
        match *self {
            Self::Gaussian { mu, sigma } => gaussian_nll(y, mu, sigma),
            Self::Laplace { mu, b } => laplace_nll(y, mu, b),
            Self::Gamma { k, phi } => gamma_nll(y, k, phi),
        }
    }
}
