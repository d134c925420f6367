//! Surgery records and their deterministic dense encoding.
//!
//! Numeric fields are z-scored with training statistics, categorical fields
//! are one-hot with a reserved unknown slot, age and start hour are binned,
//! and height, weight and hour carry missing-value indicator columns.

mod record;
mod schema;

pub use record::{RawValue, SurgeryRecord, COMORBIDITIES};
pub use schema::{
    default_fields, fit_schema, EncodedExample, FeatureGroup, FeatureSchema, FieldKind, FieldSpec,
    SchemaConfig, SCHEMA_FORMAT_VERSION, UNKNOWN_CATEGORY,
};
