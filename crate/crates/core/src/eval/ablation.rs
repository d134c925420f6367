use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metrics};
use crate::error::Result;
use crate::features::FeatureGroup;
use crate::train::{train_mlp, Dataset, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub group: String,
    pub rmse_minutes: f64,
    pub mae_minutes: f64,
    pub nll_nats: f64,
    /// Ablated minus full; positive means the group helped.
    pub delta_rmse_minutes: f64,
    pub delta_mae_minutes: f64,
    pub delta_nll_nats: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub model: String,
    pub full: Metrics,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_ablation_csv(std::slice::from_ref(self), out)
    }
}

/// One CSV holding the rows of several reports.
pub fn write_ablation_csv<W: std::io::Write>(reports: &[AblationReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "group",
        "rmse_minutes",
        "mae_minutes",
        "nll_nats",
        "delta_rmse_minutes",
        "delta_mae_minutes",
        "delta_nll_nats",
    ])?;
    for rep in reports {
        for r in &rep.rows {
            w.write_record([
                rep.model.clone(),
                r.group.clone(),
                r.rmse_minutes.to_string(),
                r.mae_minutes.to_string(),
                r.nll_nats.to_string(),
                r.delta_rmse_minutes.to_string(),
                r.delta_mae_minutes.to_string(),
                r.delta_nll_nats.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Retrain `config` once per group with that group's columns zeroed in
/// every split, and compare test metrics with the full model. All runs use
/// the same seeds.
pub fn ablation(
    config: &TrainConfig,
    train: &Dataset,
    valid: &Dataset,
    test: &Dataset,
    groups: &[FeatureGroup],
) -> Result<AblationReport> {
    let full_model = train_mlp(config, train, valid)?;
    let full = metrics(&full_model.predict(test)?, &test.y)?;
    let mut rows = Vec::with_capacity(groups.len());
    for g in groups {
        let tr = train.with_zeroed_columns(&g.columns);
        let va = valid.with_zeroed_columns(&g.columns);
        let te = test.with_zeroed_columns(&g.columns);
        let model = train_mlp(config, &tr, &va)?;
        let m = metrics(&model.predict(&te)?, &te.y)?;
        rows.push(AblationRow {
            group: g.name.clone(),
            rmse_minutes: m.rmse_minutes,
            mae_minutes: m.mae_minutes,
            nll_nats: m.nll_nats,
            delta_rmse_minutes: m.rmse_minutes - full.rmse_minutes,
            delta_mae_minutes: m.mae_minutes - full.mae_minutes,
            delta_nll_nats: m.nll_nats - full.nll_nats,
        });
    }
    Ok(AblationReport {
        model: config.model_name(),
        full,
        rows,
    })
}
