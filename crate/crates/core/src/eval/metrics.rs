use serde::{Deserialize, Serialize};

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};

/// `(mean, median)` of a predictive distribution: the point predictions
/// used for RMSE and MAE respectively.
pub fn point_prediction(dist: &PredictiveDistribution) -> Result<(f64, f64)> {
    Ok((dist.mean(), dist.median()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse_minutes: f64,
    pub mae_minutes: f64,
    /// Mean per-case NLL of the label in hours.
    pub nll_nats: f64,
}

/// RMSE (from means) and MAE (from medians) in minutes, plus mean NLL.
pub fn metrics(dists: &[PredictiveDistribution], labels_hours: &[f64]) -> Result<Metrics> {
    if dists.len() != labels_hours.len() {
        return Err(Error::Shape {
            op: "metrics",
            expected: format!("{} labels", dists.len()),
            got: format!("{}", labels_hours.len()),
        });
    }
    if dists.is_empty() {
        return Err(Error::Data("metrics need at least one case".into()));
    }
    let n = dists.len() as f64;
    let (mut se, mut ae, mut nll) = (0.0, 0.0, 0.0);
    for (d, &y) in dists.iter().zip(labels_hours) {
        let (mean, median) = point_prediction(d)?;
        se += ((mean - y) * 60.0).powi(2);
        ae += ((median - y) * 60.0).abs();
        nll += d.nll(y)?;
    }
    Ok(Metrics {
        rmse_minutes: (se / n).sqrt(),
        mae_minutes: ae / n,
        nll_nats: nll / n,
    })
}

/// `baseline − model`: positive when the model assigns the test labels
/// higher likelihood than the baseline.
pub fn nll_delta(model_nll: f64, baseline_nll: f64) -> f64 {
    baseline_nll - model_nll
}
