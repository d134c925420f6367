use serde::{Deserialize, Serialize};

use super::model::TrainedModel;
use crate::error::{Error, Result};
use crate::features::FeatureSchema;

pub const BUNDLE_FORMAT: &str = "hetreg-bundle";
pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Everything needed to score new records: the model, the fitted feature
/// schema, and the split seed used during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub split_seed: u64,
    pub schema: FeatureSchema,
    pub models: Vec<TrainedModel>,
}

impl ModelBundle {
    pub fn new(schema: FeatureSchema, split_seed: u64, models: Vec<TrainedModel>) -> Self {
        Self {
            format: BUNDLE_FORMAT.to_string(),
            version: BUNDLE_FORMAT_VERSION,
            schema_hash: schema.hash(),
            split_seed,
            schema,
            models,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(s)?;
        if b.format != BUNDLE_FORMAT || b.version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported bundle {} v{}",
                b.format, b.version
            )));
        }
        if b.schema.hash() != b.schema_hash {
            return Err(Error::Schema {
                field: "schema_hash".into(),
                msg: "bundle schema does not match its recorded hash".into(),
            });
        }
        Ok(b)
    }

    pub fn model(&self, name: &str) -> Option<&TrainedModel> {
        self.models.iter().find(|m| m.name == name)
    }
}
