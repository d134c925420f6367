use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::SurgeryRecord;

pub const MIN_DURATION_MINUTES: f64 = 5.0;
pub const MAX_DURATION_MINUTES: f64 = 24.0 * 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    TooShort,
    TooLong,
    NonFinite,
}

impl DropReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::TooShort => "too-short",
            Self::TooLong => "too-long",
            Self::NonFinite => "non-finite",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<SurgeryRecord>,
    pub dropped: Vec<(SurgeryRecord, DropReason)>,
}

impl FilterOutcome {
    pub fn tally(&self) -> BTreeMap<DropReason, usize> {
        let mut t = BTreeMap::new();
        for (_, r) in &self.dropped {
            *t.entry(*r).or_default() += 1;
        }
        t
    }

    pub fn kept_fraction(&self) -> f64 {
        let total = self.kept.len() + self.dropped.len();
        if total == 0 {
            return 0.0;
        }
        self.kept.len() as f64 / total as f64
    }
}

/// Keep durations in the closed interval [5, 1440] minutes.
pub fn filter_records(records: impl IntoIterator<Item = SurgeryRecord>) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for r in records {
        let d = r.duration_minutes;
        let reason = if !d.is_finite() {
            Some(DropReason::NonFinite)
        } else if d < MIN_DURATION_MINUTES {
            Some(DropReason::TooShort)
        } else if d > MAX_DURATION_MINUTES {
            Some(DropReason::TooLong)
        } else {
            None
        };
        match reason {
            Some(reason) => out.dropped.push((r, reason)),
            None => out.kept.push(r),
        }
    }
    out
}
