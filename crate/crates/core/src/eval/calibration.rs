use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{special::probit, Family};
use crate::error::{Error, Result};

pub const CALIBRATION_BIN_WIDTH_HOURS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    /// Midpoint of the predicted-σ interval, hours.
    pub bin_center: f64,
    /// Mean absolute error of the cases in the bin, hours.
    pub mean_abs_error: f64,
    pub count: usize,
}

/// Group cases by predicted σ into 0.05 h bins and average their absolute
/// errors. Empty bins are omitted; bins are ordered by center.
pub fn calibration(sigma_hat: &[f64], abs_error: &[f64]) -> Result<Vec<CalibrationBin>> {
    if sigma_hat.len() != abs_error.len() {
        return Err(Error::Shape {
            op: "calibration",
            expected: format!("{} errors", sigma_hat.len()),
            got: format!("{}", abs_error.len()),
        });
    }
    let mut bins: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for (&s, &e) in sigma_hat.iter().zip(abs_error) {
        if !(s.is_finite() && e.is_finite()) {
            return Err(Error::domain("calibration", "non-finite input"));
        }
        let b = bins
            .entry((s / CALIBRATION_BIN_WIDTH_HOURS).floor() as i64)
            .or_default();
        b.0 += e;
        b.1 += 1;
    }
    Ok(bins
        .into_iter()
        .map(|(i, (sum, count))| CalibrationBin {
            bin_center: (i as f64 + 0.5) * CALIBRATION_BIN_WIDTH_HOURS,
            mean_abs_error: sum / count as f64,
            count,
        })
        .collect())
}

/// Pearson correlation between bin centers and per-bin mean absolute error,
/// over bins holding at least `min_count` cases. `None` with fewer than two
/// such bins or zero variance.
pub fn calibration_correlation(bins: &[CalibrationBin], min_count: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .filter(|b| b.count >= min_count)
        .map(|b| (b.bin_center, b.mean_abs_error))
        .collect();
    pearson(&pts)
}

pub fn pearson(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub observed: f64,
}

/// Quantile of the unit-scale reference distribution of `family`.
fn standard_quantile(family: Family, p: f64) -> Result<f64> {
    match family {
        Family::Gaussian => probit(p),
        Family::Laplace => Ok(if p < 0.5 {
            (2.0 * p).ln()
        } else {
            -(2.0 - 2.0 * p).ln()
        }),
        Family::Gamma => Err(Error::config(
            "family",
            "gamma residuals have no unit-scale reference; map them through the CDF first",
        )),
    }
}

/// Sorted standardized residuals against reference quantiles at plotting
/// positions `(i − 0.5) / n`.
pub fn qq_data(standardized_residuals: &[f64], family: Family) -> Result<Vec<QqPoint>> {
    let mut obs = standardized_residuals.to_vec();
    obs.sort_by(f64::total_cmp);
    let n = obs.len() as f64;
    obs.into_iter()
        .enumerate()
        .map(|(i, observed)| {
            Ok(QqPoint {
                theoretical: standard_quantile(family, (i as f64 + 0.5) / n)?,
                observed,
            })
        })
        .collect()
}
