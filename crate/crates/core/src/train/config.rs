use serde::{Deserialize, Serialize};

use crate::distributions::{Family, Objective};
use crate::error::{Error, Result};
use crate::numcore::HeadSpec;

/// Hidden widths searched by default.
pub const WIDTH_GRID: [usize; 4] = [128, 256, 384, 512];
pub const MAX_HIDDEN_LAYERS: usize = 3;

/// Minibatch SGD settings shared by every trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub initial_lr: f64,
    pub lr_halving_period_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Batch gradients with a larger global L2 norm are rescaled to this norm.
    pub max_grad_norm: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.1,
            lr_halving_period_epochs: 50,
            epochs: 200,
            batch_size: 256,
            seed: 0,
            max_grad_norm: Some(1.0),
        }
    }
}

impl SgdConfig {
    /// `initial_lr · 0.5^⌊epoch / period⌋`
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let halvings = epoch / self.lr_halving_period_epochs.max(1);
        self.initial_lr * 0.5f64.powi(halvings.min(i32::MAX as usize) as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::config("initial_lr", "must be positive and finite"));
        }
        if self.lr_halving_period_epochs == 0 {
            return Err(Error::config("lr_halving_period_epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if let Some(c) = self.max_grad_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::config("max_grad_norm", "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Configuration of one MLP training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub family: Family,
    /// Predict a per-case scale (two outputs) instead of a point (one output).
    pub heteroscedastic: bool,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Accept a `hidden_width` outside [`WIDTH_GRID`].
    pub allow_any_width: bool,
    pub dropout_rate: f64,
    #[serde(flatten)]
    pub sgd: SgdConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::standard(Family::Gaussian, true)
    }
}

impl TrainConfig {
    /// One hidden layer: 256 units for heteroscedastic heads, 128 otherwise.
    pub fn standard(family: Family, heteroscedastic: bool) -> Self {
        Self {
            family,
            heteroscedastic,
            hidden_layers: 1,
            hidden_width: if heteroscedastic { 256 } else { 128 },
            allow_any_width: false,
            dropout_rate: 0.2,
            sgd: SgdConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Gamma && !self.heteroscedastic {
            return Err(Error::config(
                "heteroscedastic",
                "the gamma head always predicts both shape and scale; set heteroscedastic = true",
            ));
        }
        if !(1..=MAX_HIDDEN_LAYERS).contains(&self.hidden_layers) {
            return Err(Error::config(
                "hidden_layers",
                format!(
                    "must be between 1 and {MAX_HIDDEN_LAYERS}, got {}",
                    self.hidden_layers
                ),
            ));
        }
        if self.hidden_width == 0 {
            return Err(Error::config("hidden_width", "must be positive"));
        }
        if !self.allow_any_width && !WIDTH_GRID.contains(&self.hidden_width) {
            return Err(Error::config(
                "hidden_width",
                format!(
                    "{} is not one of {WIDTH_GRID:?}; set allow_any_width to override",
                    self.hidden_width
                ),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("dropout_rate", "must lie in [0, 1)"));
        }
        self.sgd.validate()
    }

    pub fn objective(&self) -> Objective {
        match (self.heteroscedastic, self.family) {
            (true, f) => Objective::Nll(f),
            (false, Family::Laplace) => Objective::AbsoluteError,
            (false, _) => Objective::SquaredError,
        }
    }

    pub fn head(&self) -> HeadSpec {
        match (self.heteroscedastic, self.family) {
            (false, _) => HeadSpec::homoscedastic(),
            (true, Family::Gamma) => HeadSpec::shape_scale(),
            (true, _) => HeadSpec::location_scale(),
        }
    }

    pub fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_width; self.hidden_layers]
    }

    /// Short identifier such as `mlp-gamma-hetero`.
    pub fn model_name(&self) -> String {
        format!(
            "mlp-{}-{}",
            self.family.name(),
            if self.heteroscedastic { "hetero" } else { "homo" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_schedule_halves_every_period() {
        let s = SgdConfig::default();
        assert_eq!(s.lr_at(0), 0.1);
        assert_eq!(s.lr_at(49), 0.1);
        assert_eq!(s.lr_at(50), 0.05);
        assert_eq!(s.lr_at(149), 0.025);
        assert_eq!(s.lr_at(150), 0.0125);
    }

    #[test]
    fn validation_rules() {
        assert!(TrainConfig::default().validate().is_ok());
        let gamma_homo = TrainConfig::standard(Family::Gamma, false);
        assert!(
            matches!(gamma_homo.validate(), Err(Error::Config { field, .. }) if field == "heteroscedastic")
        );
        let mut c = TrainConfig::default();
        c.hidden_width = 100;
        assert!(c.validate().is_err());
        c.allow_any_width = true;
        assert!(c.validate().is_ok());
        c.hidden_layers = 4;
        assert!(c.validate().is_err());
        c.hidden_layers = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn paper_shapes_are_on_the_grid() {
        let homo = TrainConfig::standard(Family::Gaussian, false);
        let hetero = TrainConfig::standard(Family::Laplace, true);
        assert_eq!((homo.hidden_layers, homo.hidden_width), (1, 128));
        assert_eq!((hetero.hidden_layers, hetero.hidden_width), (1, 256));
        assert!(homo.validate().is_ok() && hetero.validate().is_ok());
        assert_eq!(homo.head().outputs(), 1);
        assert_eq!(hetero.head().outputs(), 2);
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let c: TrainConfig = toml::from_str("family = \"laplace\"\nepochs = 3\n").unwrap();
        assert_eq!(c.family, Family::Laplace);
        assert_eq!(c.sgd.epochs, 3);
        assert_eq!(c.sgd.initial_lr, 0.1);
        let back: TrainConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
