use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.80;
pub const VALID_FRACTION: f64 = 0.08;
pub const MIN_SPLIT_RECORDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// Seeded 80/8/12 assignment of record positions to splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub labels: Vec<Split>,
}

impl SplitAssignment {
    pub fn new(n_records: usize, seed: u64) -> Result<Self> {
        if n_records < MIN_SPLIT_RECORDS {
            return Err(Error::Data(format!(
                "need at least {MIN_SPLIT_RECORDS} records to split, got {n_records}"
            )));
        }
        let n_train = (TRAIN_FRACTION * n_records as f64).round() as usize;
        let n_valid = (VALID_FRACTION * n_records as f64).round() as usize;
        let mut order: Vec<usize> = (0..n_records).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut labels = vec![Split::Test; n_records];
        for (rank, &i) in order.iter().enumerate() {
            labels[i] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_valid {
                Split::Valid
            } else {
                Split::Test
            };
        }
        Ok(Self { seed, labels })
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == which)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, which: Split) -> usize {
        self.labels.iter().filter(|s| **s == which).count()
    }

    /// Clone out the items assigned to `which`, preserving their order.
    pub fn select<T: Clone>(&self, items: &[T], which: Split) -> Vec<T> {
        debug_assert_eq!(items.len(), self.labels.len());
        items
            .iter()
            .zip(&self.labels)
            .filter(|(_, s)| **s == which)
            .map(|(t, _)| t.clone())
            .collect()
    }
}
