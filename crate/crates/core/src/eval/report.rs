use std::path::Path;

use serde::{Deserialize, Serialize};

use super::booking::{booking_curve, BookingCurve, BookingInput, BookingStrategy};
use super::calibration::{calibration, qq_data, CalibrationBin, QqPoint};
use super::metrics::{metrics, nll_delta, Metrics};
use crate::distributions::{special::probit, Family, PredictiveDistribution};
use crate::error::Result;
use crate::train::{Dataset, TrainedModel};

/// Name of the model other models' NLL deltas are measured against.
pub const BASELINE_MODEL: &str = "current-method";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub booking: Vec<BookingStrategy>,
    pub include_qq: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            booking: BookingStrategy::ALL.to_vec(),
            include_qq: true,
        }
    }
}

/// Test-set evaluation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub family: Family,
    pub heteroscedastic: bool,
    pub n_test: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub nll_delta_vs_baseline: Option<f64>,
    pub calibration: Vec<CalibrationBin>,
    /// Reference family of the QQ pairs; gamma residuals are mapped to
    /// normal scores through the predicted CDF.
    pub qq_reference: Family,
    pub qq: Vec<QqPoint>,
    pub booking: Vec<BookingCurve>,
}

/// Reports for several models on the same test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub baseline: Option<String>,
    pub reports: Vec<EvalReport>,
}

fn standardized(dists: &[PredictiveDistribution], y: &[f64]) -> Result<(Family, Vec<f64>)> {
    let family = dists
        .first()
        .map_or(Family::Gaussian, PredictiveDistribution::family);
    let mut out = Vec::with_capacity(y.len());
    let reference = match family {
        Family::Gamma => Family::Gaussian,
        f => f,
    };
    for (d, &v) in dists.iter().zip(y) {
        out.push(match *d {
            PredictiveDistribution::Gaussian { mu, sigma } => (v - mu) / sigma,
            PredictiveDistribution::Laplace { mu, b } => (v - mu) / b,
            PredictiveDistribution::Gamma { .. } => {
                probit(d.cdf(v).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))?
            }
        });
    }
    Ok((reference, out))
}

pub fn evaluate_model(
    model: &TrainedModel,
    test: &Dataset,
    baseline_nll: Option<f64>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let dists = model.predict(test)?;
    let m = metrics(&dists, &test.y)?;
    let sigma: Vec<f64> = dists.iter().map(PredictiveDistribution::std_dev).collect();
    let abs_err: Vec<f64> = dists
        .iter()
        .zip(&test.y)
        .map(|(d, y)| (y - d.mean()).abs())
        .collect();
    let (qq_reference, resid) = standardized(&dists, &test.y)?;
    let qq = if opts.include_qq {
        qq_data(&resid, qq_reference)?
    } else {
        Vec::new()
    };
    let booking = opts
        .booking
        .iter()
        .map(|&s| booking_curve(BookingInput::Distributions(&dists), &test.y, s, &s.default_grid()))
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        model: model.name.clone(),
        family: model.family,
        heteroscedastic: model.is_heteroscedastic(),
        n_test: test.len(),
        metrics: m,
        nll_delta_vs_baseline: baseline_nll.map(|b| nll_delta(m.nll_nats, b)),
        calibration: calibration(&sigma, &abs_err)?,
        qq_reference,
        qq,
        booking,
    })
}

/// Evaluate every model; NLL deltas are taken against the current-method
/// model when it is among them.
pub fn evaluate(models: &[TrainedModel], test: &Dataset, opts: &EvalOptions) -> Result<EvalSummary> {
    let baseline = models.iter().find(|m| m.name == BASELINE_MODEL);
    let baseline_nll = baseline.map(|b| b.mean_nll(test)).transpose()?;
    let reports = models
        .iter()
        .map(|m| evaluate_model(m, test, baseline_nll, opts))
        .collect::<Result<_>>()?;
    Ok(EvalSummary {
        baseline: baseline.map(|b| b.name.clone()),
        reports,
    })
}

impl EvalSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Write `report.json`, `metrics.csv`, `calibration.csv`, `qq.csv` and
    /// `booking_curve.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;

        let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
        w.write_record([
            "model",
            "rmse_minutes",
            "mae_minutes",
            "nll_nats",
            "nll_delta_vs_baseline",
        ])?;
        for r in &self.reports {
            w.write_record([
                r.model.clone(),
                r.metrics.rmse_minutes.to_string(),
                r.metrics.mae_minutes.to_string(),
                r.metrics.nll_nats.to_string(),
                r.nll_delta_vs_baseline.map(|d| d.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("calibration.csv"))?;
        w.write_record(["model", "bin_center", "mean_abs_error", "count"])?;
        for r in &self.reports {
            for b in &r.calibration {
                w.write_record([
                    r.model.clone(),
                    b.bin_center.to_string(),
                    b.mean_abs_error.to_string(),
                    b.count.to_string(),
                ])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("qq.csv"))?;
        w.write_record(["model", "reference", "theoretical", "observed"])?;
        for r in &self.reports {
            for q in &r.qq {
                w.write_record([
                    r.model.clone(),
                    r.qq_reference.name().to_string(),
                    q.theoretical.to_string(),
                    q.observed.to_string(),
                ])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("booking_curve.csv"))?;
        w.write_record([
            "model",
            "strategy",
            "knob",
            "overbooked_minutes",
            "underbooked_minutes",
        ])?;
        for r in &self.reports {
            for c in &r.booking {
                for p in &c.points {
                    w.write_record([
                        r.model.clone(),
                        c.strategy.name().to_string(),
                        p.knob.to_string(),
                        p.overbooked_minutes.to_string(),
                        p.underbooked_minutes.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
