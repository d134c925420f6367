use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use super::mlp::{HeadSpec, Layer, MlpModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "hetreg-mlp";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned JSON layout of an [`MlpModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub head: HeadSpec,
    pub dropout_rate: f64,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_hash: Option<String>,
}

impl ModelDocument {
    pub fn from_model(model: &MlpModel, schema_hash: Option<String>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            layer_dims: model.layer_dims(),
            weights: model.layers.iter().map(|l| l.weight.data().to_vec()).collect(),
            biases: model.layers.iter().map(|l| l.bias.clone()).collect(),
            head: model.head.clone(),
            dropout_rate: model.dropout_rate,
            rng_seed: model.rng_seed,
            schema_hash,
        }
    }

    pub fn into_model(self) -> Result<MlpModel> {
        if self.format != MODEL_FORMAT || self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model document {} v{}",
                self.format, self.version
            )));
        }
        let n = self.layer_dims.len();
        if n < 2 || self.weights.len() != n - 1 || self.biases.len() != n - 1 {
            return Err(Error::Data("model document layer count mismatch".into()));
        }
        if self.layer_dims[n - 1] != self.head.outputs() {
            return Err(Error::Data("head outputs disagree with last layer".into()));
        }
        let layers = self
            .weights
            .into_iter()
            .zip(self.biases)
            .zip(self.layer_dims.windows(2))
            .map(|((w, b), dims)| {
                if b.len() != dims[1] {
                    return Err(Error::Data("bias length mismatch".into()));
                }
                Ok(Layer {
                    weight: DenseMatrix::from_vec(dims[0], dims[1], w)?,
                    bias: b,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MlpModel {
            layers,
            head: self.head,
            dropout_rate: self.dropout_rate,
            rng_seed: self.rng_seed,
        })
    }
}

impl MlpModel {
    pub fn to_json(&self, schema_hash: Option<String>) -> Result<String> {
        Ok(serde_json::to_string(&ModelDocument::from_model(
            self,
            schema_hash,
        ))?)
    }

    /// Parse a model document; returns the model and its schema hash.
    pub fn from_json(s: &str) -> Result<(Self, Option<String>)> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        let hash = doc.schema_hash.clone();
        Ok((doc.into_model()?, hash))
    }
}
