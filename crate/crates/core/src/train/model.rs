use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::dataset::Dataset;
use crate::distributions::{Family, PredictiveDistribution, SCALE_FLOOR};
use crate::error::{Error, Result};
use crate::features::SurgeryRecord;
use crate::numcore::{MlpModel, ModelDocument};

/// Per-procedure mean durations in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureMeans {
    pub means: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    /// Fallback for procedures absent from training.
    pub global_mean: f64,
}

impl ProcedureMeans {
    pub fn fit(train: &[SurgeryRecord]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data(
                "procedure means need a nonempty training split".into(),
            ));
        }
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut total = 0.0;
        for r in train {
            let y = r.label_hours();
            let e = sums.entry(r.procedure_id.clone()).or_default();
            e.0 += y;
            e.1 += 1;
            total += y;
        }
        Ok(Self {
            means: sums
                .iter()
                .map(|(k, (s, n))| (k.clone(), s / *n as f64))
                .collect(),
            counts: sums.into_iter().map(|(k, (_, n))| (k, n)).collect(),
            global_mean: total / train.len() as f64,
        })
    }

    pub fn predict(&self, record: &SurgeryRecord) -> f64 {
        self.means
            .get(&record.procedure_id)
            .copied()
            .unwrap_or(self.global_mean)
    }
}

mod network_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &MlpModel, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDocument::from_model(m, None).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<MlpModel, D::Error> {
        ModelDocument::deserialize(d)?
            .into_model()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    /// Booked minutes already present in each record.
    CurrentMethod,
    ProcedureMeans(ProcedureMeans),
    Linear {
        #[serde(with = "network_serde")]
        network: MlpModel,
    },
    Mlp {
        #[serde(with = "network_serde")]
        network: MlpModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean training objective over the epoch's minibatches.
    pub train_loss: f64,
    pub valid_nll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Validation NLL of the model before any update.
    pub initial_valid_nll: f64,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept; `None` means the initialization.
    pub best_epoch: Option<usize>,
    pub best_valid_nll: f64,
}

impl TrainingLog {
    pub fn untrained(valid_nll: f64) -> Self {
        Self {
            initial_valid_nll: valid_nll,
            epochs: Vec::new(),
            best_epoch: None,
            best_valid_nll: valid_nll,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.epochs {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A fitted model of any kind, able to produce predictive distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub name: String,
    /// Family of the emitted predictive distributions.
    pub family: Family,
    pub params: ModelParams,
    /// Validation-fitted scale; present exactly for homoscedastic models.
    pub constant_scale: Option<f64>,
    pub log: TrainingLog,
    pub config: Option<TrainConfig>,
}

impl TrainedModel {
    pub fn is_heteroscedastic(&self) -> bool {
        self.constant_scale.is_none()
    }

    pub fn network(&self) -> Option<&MlpModel> {
        match &self.params {
            ModelParams::Linear { network } | ModelParams::Mlp { network } => Some(network),
            _ => None,
        }
    }

    /// Point predictions (hours) of a homoscedastic model, or raw two-output
    /// rows of a heteroscedastic one, flattened row-major.
    fn raw(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(match &self.params {
            ModelParams::CurrentMethod => data.records.iter().map(|r| r.scheduled_minutes / 60.0).collect(),
            ModelParams::ProcedureMeans(t) => data.records.iter().map(|r| t.predict(r)).collect(),
            ModelParams::Linear { network } | ModelParams::Mlp { network } => {
                network.predict_raw(&data.x)?.into_vec()
            }
        })
    }

    /// Point predictions in hours: the predicted mean.
    pub fn point_predictions(&self, data: &Dataset) -> Result<Vec<f64>> {
        if self.is_heteroscedastic() {
            Ok(self
                .predict(data)?
                .iter()
                .map(PredictiveDistribution::mean)
                .collect())
        } else {
            self.raw(data)
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<PredictiveDistribution>> {
        let raw = self.raw(data)?;
        match self.constant_scale {
            Some(scale) => raw
                .into_iter()
                .map(|p| PredictiveDistribution::with_constant_scale(self.family, p, scale))
                .collect(),
            None => raw
                .chunks(2)
                .map(|r| PredictiveDistribution::from_raw(self.family, r))
                .collect(),
        }
    }

    /// Mean NLL (nats, hours scale) on a dataset.
    pub fn mean_nll(&self, data: &Dataset) -> Result<f64> {
        mean_nll(&self.predict(data)?, &data.y)
    }

    /// Weights of a linear model paired with column names, largest magnitude first.
    pub fn linear_coefficients(&self, column_names: &[String]) -> Option<Vec<(String, f64)>> {
        let ModelParams::Linear { network } = &self.params else {
            return None;
        };
        let w = &network.layers[0].weight;
        let mut out: Vec<(String, f64)> = column_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), w.get(i, 0)))
            .collect();
        out.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        Some(out)
    }
}

pub fn mean_nll(dists: &[PredictiveDistribution], y: &[f64]) -> Result<f64> {
    if dists.len() != y.len() || y.is_empty() {
        return Err(Error::Shape {
            op: "mean_nll",
            expected: format!("{} labels", dists.len()),
            got: format!("{}", y.len()),
        });
    }
    let mut s = 0.0;
    for (d, &v) in dists.iter().zip(y) {
        s += d.nll(v)?;
    }
    Ok(s / y.len() as f64)
}

/// Constant scale minimizing the NLL of the given residuals: the RMS for a
/// Gaussian, the mean absolute residual for a Laplace. Floored at
/// [`SCALE_FLOOR`].
pub fn fit_constant_scale(family: Family, residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Data("cannot fit a scale to zero residuals".into()));
    }
    let n = residuals.len() as f64;
    let s = match family {
        Family::Gaussian => (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt(),
        Family::Laplace => residuals.iter().map(|r| r.abs()).sum::<f64>() / n,
        Family::Gamma => {
            return Err(Error::config(
                "family",
                "gamma has no constant-scale (homoscedastic) form",
            ))
        }
    };
    if !s.is_finite() {
        return Err(Error::domain("fit_constant_scale", "non-finite residuals"));
    }
    Ok(s.max(SCALE_FLOOR))
}
