use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, MAX_HIDDEN_LAYERS, WIDTH_GRID};
use super::dataset::Dataset;
use super::model::TrainedModel;
use super::trainer::train_mlp;
use crate::error::{Error, Result};

/// Every (hidden layers, width) pair with 1–3 layers and widths from [`WIDTH_GRID`].
pub fn standard_grid() -> Vec<(usize, usize)> {
    (1..=MAX_HIDDEN_LAYERS)
        .flat_map(|l| WIDTH_GRID.iter().map(move |&w| (l, w)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Best validation NLL reached during training.
    pub valid_nll: f64,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub results: Vec<GridResult>,
    pub best_index: usize,
    pub best_config: TrainConfig,
    pub best_model: TrainedModel,
}

impl GridSearch {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.results {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Train `base` at every grid point (in order) and keep the one with the
/// lowest validation NLL; ties go to the earlier point.
pub fn grid_search(
    base: &TrainConfig,
    grid: &[(usize, usize)],
    train: &Dataset,
    valid: &Dataset,
) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(Error::config("grid", "must contain at least one configuration"));
    }
    let mut results = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, TrainConfig, TrainedModel)> = None;
    for (i, &(layers, width)) in grid.iter().enumerate() {
        let cfg = TrainConfig {
            hidden_layers: layers,
            hidden_width: width,
            ..base.clone()
        };
        let model = train_mlp(&cfg, train, valid)?;
        let score = model.mean_nll(valid)?;
        results.push(GridResult {
            hidden_layers: layers,
            hidden_width: width,
            valid_nll: score,
            best_epoch: model.log.best_epoch,
        });
        let better = match &best {
            None => true,
            Some((j, _, _)) => score < results[*j].valid_nll,
        };
        if better {
            best = Some((i, cfg, model));
        }
    }
    let (best_index, best_config, best_model) = best.expect("grid is nonempty");
    Ok(GridSearch {
        results,
        best_index,
        best_config,
        best_model,
    })
}
