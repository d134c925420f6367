//! Surgery-log ingestion, duration filtering, seeded splits and a synthetic
//! corpus generator with per-case Gamma ground truth.

mod csv_io;
mod filter;
mod generator;
mod split;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use csv_io::{
    read_records, read_records_file, read_truth, record_header, write_records, write_records_file,
    write_truth, TruthRow,
};
pub use filter::{filter_records, DropReason, FilterOutcome, MAX_DURATION_MINUTES, MIN_DURATION_MINUTES};
pub use generator::{
    generate_records, procedure_counts, scheduled_minutes_for, FeatureEffects, GeneratorConfig,
    GeneratorLatents, ProcedureLatent, SpreadDrivers, SurgeonLatent, ANESTHESIA_TYPES, DAYS, PATIENT_CLASSES,
};
pub use split::{Split, SplitAssignment, MIN_SPLIT_RECORDS, TRAIN_FRACTION, VALID_FRACTION};

use crate::error::Result;
use crate::features::SurgeryRecord;

/// Where a corpus came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    File { path: PathBuf },
    Generator { seed: u64, config: GeneratorConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<SurgeryRecord>,
    pub provenance: Provenance,
    /// Ground truth aligned with `records`, when generated.
    pub truth: Option<Vec<TruthRow>>,
    pub splits: Option<SplitAssignment>,
}

impl Corpus {
    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self {
            records: read_records_file(path)?,
            provenance: Provenance::File {
                path: path.to_path_buf(),
            },
            truth: None,
            splits: None,
        })
    }

    /// Drop out-of-range durations, keeping truth rows aligned. Any existing
    /// split assignment is discarded.
    pub fn filtered(self) -> (Self, FilterOutcome) {
        let mut outcome = filter_records(self.records);
        let truth = self.truth.map(|t| {
            let keep: std::collections::BTreeSet<u64> = outcome.kept.iter().map(|r| r.id).collect();
            t.into_iter().filter(|row| keep.contains(&row.id)).collect()
        });
        let records = std::mem::take(&mut outcome.kept);
        outcome.kept = records.clone();
        (
            Self {
                records,
                provenance: self.provenance,
                truth,
                splits: None,
            },
            outcome,
        )
    }

    pub fn assign_splits(&mut self, seed: u64) -> Result<&SplitAssignment> {
        self.splits = Some(SplitAssignment::new(self.records.len(), seed)?);
        Ok(self.splits.as_ref().unwrap())
    }

    /// Records of one split, or an error if splits were never assigned.
    pub fn view(&self, which: Split) -> Result<Vec<SurgeryRecord>> {
        let s = self
            .splits
            .as_ref()
            .ok_or_else(|| crate::Error::Data("corpus has no split assignment".into()))?;
        Ok(s.select(&self.records, which))
    }
}

/// Generate a synthetic corpus.
pub fn generate(config: &GeneratorConfig) -> Result<Corpus> {
    let (records, truth) = generate_records(config)?;
    Ok(Corpus {
        records,
        provenance: Provenance::Generator {
            seed: config.seed,
            config: config.clone(),
        },
        truth: Some(truth),
        splits: None,
    })
}
