use crate::features::{FeatureSchema, SurgeryRecord};
use crate::numcore::DenseMatrix;

/// Records of one split together with their encoded design matrix and
/// labels in hours.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<SurgeryRecord>,
    pub x: DenseMatrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn encode(schema: &FeatureSchema, records: Vec<SurgeryRecord>) -> Self {
        let (x, y) = schema.encode_all(&records);
        Self { records, x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Copy with the given encoded columns set to zero.
    pub fn with_zeroed_columns(&self, columns: &[usize]) -> Self {
        let mut out = self.clone();
        out.x.zero_columns(columns);
        out
    }
}
