use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::{RawValue, SurgeryRecord, COMORBIDITIES};
use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;

pub const SCHEMA_FORMAT_VERSION: u32 = 1;
pub const UNKNOWN_CATEGORY: &str = "<unknown>";

/// How one raw field is turned into columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    /// `(x − mean) / std`; a missing value encodes as 0.
    NumericZscored { mean: f64, std: f64 },
    /// Single 0/1 column.
    Binary,
    /// One column per vocabulary entry plus a trailing "unknown" slot.
    CategoricalOneHot { vocabulary: Vec<String> },
    /// One-hot over intervals cut at `edges`. With `left_open` the bins are
    /// `(−∞, e0], (e0, e1], …, (e_last, ∞)`, otherwise `[e_i, e_{i+1})`.
    BinnedCategorical { edges: Vec<f64>, left_open: bool },
}

impl FieldKind {
    fn width(&self) -> usize {
        match self {
            FieldKind::NumericZscored { .. } | FieldKind::Binary => 1,
            FieldKind::CategoricalOneHot { vocabulary } => vocabulary.len() + 1,
            FieldKind::BinnedCategorical { edges, .. } => edges.len() + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    /// Ablation group the field's columns belong to.
    pub group: String,
    pub kind: FieldKind,
    pub missing_indicator: bool,
}

impl FieldSpec {
    pub fn width(&self) -> usize {
        self.kind.width() + usize::from(self.missing_indicator)
    }
}

/// Knobs for [`fit_schema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    /// Categories seen fewer times than this in training map to the unknown slot.
    pub min_category_count: usize,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self {
            min_category_count: 1,
        }
    }
}

/// Fitted, immutable description of the encoded feature layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub config: SchemaConfig,
    pub fields: Vec<FieldSpec>,
}

/// Encoded feature vector plus its label in hours.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub features: Vec<f64>,
    pub label_hours: f64,
}

/// Named set of encoded columns, used by the ablation runner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

fn field(name: &str, group: &str, kind: FieldKind, missing_indicator: bool) -> FieldSpec {
    FieldSpec {
        name: name.to_string(),
        group: group.to_string(),
        kind,
        missing_indicator,
    }
}

fn onehot() -> FieldKind {
    FieldKind::CategoricalOneHot { vocabulary: vec![] }
}

/// Unfitted field layout: order here is the column order of every encoding.
pub fn default_fields() -> Vec<FieldSpec> {
    let numeric = || FieldKind::NumericZscored { mean: 0.0, std: 1.0 };
    let mut f = vec![
        field(
            "age",
            "age",
            FieldKind::BinnedCategorical {
                edges: (1..=8).map(|i| 10.0 * i as f64).collect(),
                left_open: true,
            },
            false,
        ),
        field("sex", "sex", FieldKind::Binary, false),
        field("weight", "weight", numeric(), true),
        field("height", "height", numeric(), true),
        field(
            "hour",
            "hour",
            FieldKind::BinnedCategorical {
                edges: (1..=7).map(|i| 3.0 * i as f64).collect(),
                left_open: false,
            },
            true,
        ),
        field("day", "day", onehot(), false),
        field("month", "month", onehot(), false),
        field("location", "location", onehot(), false),
        field("class", "class", onehot(), false),
        field("asa", "asa", onehot(), false),
        field("anesthesia", "anesthesia", onehot(), false),
        field("surgeon", "surgeon", onehot(), false),
        field("procedure", "procedure", onehot(), false),
    ];
    f.extend(
        COMORBIDITIES
            .iter()
            .map(|c| field(c, "comorbidities", FieldKind::Binary, false)),
    );
    f
}

/// Fit z-score statistics and vocabularies on the training split.
pub fn fit_schema(train: &[SurgeryRecord], config: &SchemaConfig) -> Result<FeatureSchema> {
    if train.is_empty() {
        return Err(Error::Data("cannot fit a schema on an empty training set".into()));
    }
    let mut fields = default_fields();
    for spec in &mut fields {
        match &mut spec.kind {
            FieldKind::NumericZscored { mean, std } => {
                let values: Vec<f64> = train
                    .iter()
                    .filter_map(|r| match r.field(&spec.name) {
                        Some(RawValue::Number(v)) => v,
                        _ => None,
                    })
                    .collect();
                if values.is_empty() {
                    return Err(Error::Schema {
                        field: spec.name.clone(),
                        msg: "no observed values in training data".into(),
                    });
                }
                let n = values.len() as f64;
                let m = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                if !(var > 0.0) {
                    return Err(Error::Schema {
                        field: spec.name.clone(),
                        msg: "zero variance in training data".into(),
                    });
                }
                *mean = m;
                *std = var.sqrt();
            }
            FieldKind::CategoricalOneHot { vocabulary } => {
                let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                for r in train {
                    if let Some(RawValue::Category(Some(c))) = r.field(&spec.name) {
                        *counts.entry(c.into_owned()).or_default() += 1;
                    }
                }
                *vocabulary = counts
                    .into_iter()
                    .filter(|(c, n)| *n >= config.min_category_count && c != UNKNOWN_CATEGORY)
                    .map(|(c, _)| c)
                    .collect();
            }
            FieldKind::Binary | FieldKind::BinnedCategorical { .. } => {}
        }
    }
    Ok(FeatureSchema {
        version: SCHEMA_FORMAT_VERSION,
        config: config.clone(),
        fields,
    })
}

fn bin_index(edges: &[f64], left_open: bool, x: f64) -> usize {
    if left_open {
        edges.iter().take_while(|&&e| x > e).count()
    } else {
        edges.iter().take_while(|&&e| x >= e).count()
    }
}

impl FeatureSchema {
    pub fn width(&self) -> usize {
        self.fields.iter().map(FieldSpec::width).sum()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("schema serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(s)?;
        if schema.version != SCHEMA_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported schema version {}",
                schema.version
            )));
        }
        Ok(schema)
    }

    /// Write one record's columns into `out` (length [`Self::width`]).
    pub fn encode_into(&self, record: &SurgeryRecord, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.width());
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut off = 0;
        for spec in &self.fields {
            let w = spec.kind.width();
            let value = record.field(&spec.name);
            let mut missing = false;
            match (&spec.kind, value) {
                (FieldKind::NumericZscored { mean, std }, Some(RawValue::Number(v))) => match v {
                    Some(x) => out[off] = (x - mean) / std,
                    None => missing = true,
                },
                (FieldKind::Binary, Some(RawValue::Flag(b))) => out[off] = f64::from(u8::from(b)),
                (FieldKind::CategoricalOneHot { vocabulary }, Some(RawValue::Category(c))) => {
                    let slot = c
                        .and_then(|c| vocabulary.binary_search_by(|v| v.as_str().cmp(&c)).ok())
                        .unwrap_or(vocabulary.len());
                    out[off + slot] = 1.0;
                }
                (FieldKind::BinnedCategorical { edges, left_open }, Some(RawValue::Number(v))) => match v {
                    Some(x) => out[off + bin_index(edges, *left_open, x)] = 1.0,
                    None => missing = true,
                },
                _ => missing = true,
            }
            off += w;
            if spec.missing_indicator {
                out[off] = f64::from(u8::from(missing));
                off += 1;
            }
        }
    }

    pub fn encode(&self, record: &SurgeryRecord) -> EncodedExample {
        let mut features = vec![0.0; self.width()];
        self.encode_into(record, &mut features);
        EncodedExample {
            features,
            label_hours: record.label_hours(),
        }
    }

    /// Encode a batch of records into a design matrix and a label vector.
    pub fn encode_all(&self, records: &[SurgeryRecord]) -> (DenseMatrix, Vec<f64>) {
        let w = self.width();
        let mut m = DenseMatrix::zeros(records.len(), w);
        for (i, r) in records.iter().enumerate() {
            self.encode_into(r, m.row_mut(i));
        }
        let y = records.iter().map(SurgeryRecord::label_hours).collect();
        (m, y)
    }

    /// Human-readable name of every column, in order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for spec in &self.fields {
            match &spec.kind {
                FieldKind::NumericZscored { .. } | FieldKind::Binary => names.push(spec.name.clone()),
                FieldKind::CategoricalOneHot { vocabulary } => {
                    names.extend(vocabulary.iter().map(|v| format!("{}={v}", spec.name)));
                    names.push(format!("{}={UNKNOWN_CATEGORY}", spec.name));
                }
                FieldKind::BinnedCategorical { edges, left_open } => {
                    for i in 0..=edges.len() {
                        let lo = if i == 0 {
                            "-inf".to_string()
                        } else {
                            edges[i - 1].to_string()
                        };
                        let hi = edges.get(i).map_or("inf".to_string(), f64::to_string);
                        names.push(if *left_open {
                            format!("{}=({lo},{hi}]", spec.name)
                        } else {
                            format!("{}=[{lo},{hi})", spec.name)
                        });
                    }
                }
            }
            if spec.missing_indicator {
                names.push(format!("{}_missing", spec.name));
            }
        }
        names
    }

    /// Partition of the encoded columns into named groups, in schema order.
    pub fn feature_groups(&self) -> Vec<FeatureGroup> {
        let mut groups: Vec<FeatureGroup> = Vec::new();
        let mut off = 0;
        for spec in &self.fields {
            let cols = off..off + spec.width();
            off += spec.width();
            match groups.iter_mut().find(|g| g.name == spec.group) {
                Some(g) => g.columns.extend(cols),
                None => groups.push(FeatureGroup {
                    name: spec.group.clone(),
                    columns: cols.collect(),
                }),
            }
        }
        groups
    }

    /// Column range of one field.
    pub fn field_columns(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut off = 0;
        for spec in &self.fields {
            if spec.name == name {
                return Some(off..off + spec.width());
            }
            off += spec.width();
        }
        None
    }
}
