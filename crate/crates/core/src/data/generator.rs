use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::csv_io::TruthRow;
use crate::error::{Error, Result};
use crate::features::{SurgeryRecord, COMORBIDITIES};

pub const DAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
pub const PATIENT_CLASSES: [&str; 7] = [
    "Emergency",
    "Hospital Outpatient Surgery",
    "Inpatient",
    "Observation",
    "Outpatient Procedure",
    "Surgery Admit",
    "Trauma",
];
pub const ANESTHESIA_TYPES: [&str; 5] = ["General", "MAC", "Neuraxial", "None", "Other"];

const CLASS_WEIGHTS: [f64; 7] = [0.06, 0.40, 0.20, 0.05, 0.12, 0.15, 0.02];
const ASA_WEIGHTS: [f64; 6] = [0.10, 0.40, 0.35, 0.12, 0.025, 0.005];
const ANESTHESIA_WEIGHTS: [f64; 5] = [0.55, 0.25, 0.08, 0.08, 0.04];
const DAY_WEIGHTS: [f64; 7] = [1.0, 1.0, 1.0, 1.0, 1.0, 0.12, 0.08];
const COMORBIDITY_PREVALENCE: [f64; 14] = [
    0.15, 0.08, 0.07, 0.06, 0.05, 0.10, 0.15, 0.35, 0.02, 0.10, 0.04, 0.02, 0.08, 0.03,
];
/// Elective start hours 7..=17 and their relative frequencies.
const START_WEIGHTS: [f64; 11] = [10.0, 9.0, 8.0, 7.0, 6.0, 6.0, 5.0, 5.0, 4.0, 3.0, 2.0];

/// Log-scale effects of case features on the conditional mean duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureEffects {
    /// Standard deviation of log surgeon speed multipliers.
    pub surgeon_log_sd: f64,
    /// Standard deviation of log per-room multipliers.
    pub location_log_sd: f64,
    /// Per ASA level above 1.
    pub asa_per_level: f64,
    /// Emergency and trauma classes.
    pub emergency: f64,
    /// In the order of [`ANESTHESIA_TYPES`].
    pub anesthesia: [f64; 5],
    pub female: f64,
    /// Per year of age above 50.
    pub age_per_year_over_50: f64,
    /// Per BMI unit above 30.
    pub bmi_per_unit_over_30: f64,
    /// Cases starting at or after 15:00.
    pub late_start: f64,
    /// In the order of [`COMORBIDITIES`].
    pub comorbidities: [f64; 14],
}

impl Default for FeatureEffects {
    fn default() -> Self {
        let mut comorbidities = [0.0; 14];
        for (name, v) in [
            ("copd", 0.03),
            ("chf", 0.05),
            ("cirrhosis", 0.04),
            ("osa", 0.03),
            ("dialysis", 0.04),
        ] {
            comorbidities[COMORBIDITIES.iter().position(|c| *c == name).unwrap()] = v;
        }
        Self {
            surgeon_log_sd: 0.2,
            location_log_sd: 0.08,
            asa_per_level: 0.06,
            emergency: 0.10,
            anesthesia: [0.15, -0.10, 0.05, -0.25, 0.0],
            female: -0.03,
            age_per_year_over_50: 0.004,
            bmi_per_unit_over_30: 0.01,
            late_start: -0.10,
            comorbidities,
        }
    }
}

impl FeatureEffects {
    /// Every effect off: the conditional mean is the procedure base mean.
    pub fn none() -> Self {
        Self {
            surgeon_log_sd: 0.0,
            location_log_sd: 0.0,
            asa_per_level: 0.0,
            emergency: 0.0,
            anesthesia: [0.0; 5],
            female: 0.0,
            age_per_year_over_50: 0.0,
            bmi_per_unit_over_30: 0.0,
            late_start: 0.0,
            comorbidities: [0.0; 14],
        }
    }
}

/// Weights of the three drivers of the conditional spread; they sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpreadDrivers {
    pub procedure: f64,
    pub asa: f64,
    pub emergency: f64,
}

impl Default for SpreadDrivers {
    fn default() -> Self {
        Self {
            procedure: 0.8,
            asa: 0.1,
            emergency: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_records: usize,
    pub n_procedures: usize,
    pub n_surgeons: usize,
    pub n_locations: usize,
    pub seed: u64,
    /// Ratio of the largest to the smallest conditional standard deviation.
    pub hetero_strength: f64,
    /// Conditional standard deviation at the middle of the spread range.
    pub sigma_ref_minutes: f64,
    /// Procedure base means are log-uniform on this interval.
    pub base_mean_minutes: (f64, f64),
    pub procedure_zipf_exponent: f64,
    pub surgeon_zipf_exponent: f64,
    /// Probability that each of height, weight and start time is blank.
    pub missing_fraction: f64,
    /// Fraction of durations overwritten with implausible logged values.
    pub clerical_error_fraction: f64,
    pub effects: FeatureEffects,
    pub spread: SpreadDrivers,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_records: 50_000,
            n_procedures: 120,
            n_surgeons: 60,
            n_locations: 10,
            seed: 0,
            hetero_strength: 16.0,
            sigma_ref_minutes: 30.0,
            base_mean_minutes: (30.0, 300.0),
            procedure_zipf_exponent: 1.1,
            surgeon_zipf_exponent: 0.8,
            missing_fraction: 0.05,
            clerical_error_fraction: 0.01,
            effects: FeatureEffects::default(),
            spread: SpreadDrivers::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_records", self.n_records),
            ("n_procedures", self.n_procedures),
            ("n_surgeons", self.n_surgeons),
            ("n_locations", self.n_locations),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if !(self.hetero_strength >= 1.0) || !self.hetero_strength.is_finite() {
            return Err(Error::config("hetero_strength", "must be a finite value >= 1"));
        }
        if !(self.sigma_ref_minutes > 0.0) || !self.sigma_ref_minutes.is_finite() {
            return Err(Error::config("sigma_ref_minutes", "must be positive"));
        }
        let (lo, hi) = self.base_mean_minutes;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::config("base_mean_minutes", "need 0 < low <= high"));
        }
        for (name, v) in [
            ("missing_fraction", self.missing_fraction),
            ("clerical_error_fraction", self.clerical_error_fraction),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
        }
        for (name, v) in [
            ("procedure_zipf_exponent", self.procedure_zipf_exponent),
            ("surgeon_zipf_exponent", self.surgeon_zipf_exponent),
            ("effects.surgeon_log_sd", self.effects.surgeon_log_sd),
            ("effects.location_log_sd", self.effects.location_log_sd),
            ("spread.procedure", self.spread.procedure),
            ("spread.asa", self.spread.asa),
            ("spread.emergency", self.spread.emergency),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be finite and non-negative"));
            }
        }
        let s = &self.spread;
        if ((s.procedure + s.asa + s.emergency) - 1.0).abs() > 1e-9 {
            return Err(Error::config("spread", "weights must sum to 1"));
        }
        Ok(())
    }

    /// Procedure, surgeon and room latents. They depend on the seed and the
    /// counts but not on `n_records`.
    pub fn latents(&self) -> Result<GeneratorLatents> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (lo, hi) = self.base_mean_minutes;
        let mut base: Vec<f64> = (0..self.n_procedures)
            .map(|_| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp())
            .collect();
        // longer procedures tend to be more variable, and procedures split
        // into a steady and an erratic half
        let mut order: Vec<usize> = (0..base.len()).collect();
        order.sort_by(|&a, &b| base[a].total_cmp(&base[b]));
        let mut rank = vec![0.0; base.len()];
        let denom = (base.len().max(2) - 1) as f64;
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r as f64 / denom;
        }
        let procedures = (0..self.n_procedures)
            .map(|i| {
                let variability = 0.5 * rank[i] + if rng.random_bool(0.5) { 0.5 } else { 0.0 };
                let sd = self.sigma_at(variability, 1, false);
                let m = std::mem::take(&mut base[i]);
                ProcedureLatent {
                    id: format!("P{:04}", i + 1),
                    frequency: 1.0 / ((i + 1) as f64).powf(self.procedure_zipf_exponent),
                    base_mean_minutes: m,
                    variability,
                    base_shape: (m / sd).powi(2),
                    base_scale_minutes: sd * sd / m,
                }
            })
            .collect();
        let surgeon_noise = Normal::new(0.0, self.effects.surgeon_log_sd.max(1e-300)).unwrap();
        let surgeons = (0..self.n_surgeons)
            .map(|i| SurgeonLatent {
                id: format!("S{:03}", i + 1),
                frequency: 1.0 / ((i + 1) as f64).powf(self.surgeon_zipf_exponent),
                speed: if self.effects.surgeon_log_sd > 0.0 {
                    surgeon_noise.sample(&mut rng).exp()
                } else {
                    1.0
                },
            })
            .collect();
        let room_noise = Normal::new(0.0, self.effects.location_log_sd.max(1e-300)).unwrap();
        let locations = (0..self.n_locations)
            .map(|i| {
                let m = if self.effects.location_log_sd > 0.0 {
                    room_noise.sample(&mut rng).exp()
                } else {
                    1.0
                };
                (format!("OR{:02}", i + 1), m)
            })
            .collect();
        Ok(GeneratorLatents {
            procedures,
            surgeons,
            locations,
        })
    }

    /// Conditional standard deviation in minutes.
    fn sigma_at(&self, variability: f64, asa: u8, emergency: bool) -> f64 {
        let s = &self.spread;
        let u = s.procedure * variability
            + s.asa * f64::from(asa.saturating_sub(1)) / 5.0
            + s.emergency * f64::from(u8::from(emergency));
        self.sigma_ref_minutes * self.hetero_strength.powf(u - 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureLatent {
    pub id: String,
    /// Unnormalized sampling weight.
    pub frequency: f64,
    pub base_mean_minutes: f64,
    /// Position in [0, 1] on the spread scale.
    pub variability: f64,
    /// Gamma shape for a reference case (ASA 1, elective, all effects neutral).
    pub base_shape: f64,
    /// Gamma scale for the reference case, in minutes.
    pub base_scale_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeonLatent {
    pub id: String,
    pub frequency: f64,
    /// Multiplier on the conditional mean.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorLatents {
    pub procedures: Vec<ProcedureLatent>,
    pub surgeons: Vec<SurgeonLatent>,
    /// Room name and its mean multiplier.
    pub locations: Vec<(String, f64)>,
}

fn weighted(weights: impl IntoIterator<Item = f64>) -> WeightedIndex<f64> {
    WeightedIndex::new(weights).expect("positive weights")
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

/// Booked minutes under the current practice: the procedure's mean rounded
/// to a 15-minute block.
pub fn scheduled_minutes_for(base_mean_minutes: f64) -> f64 {
    round_to(base_mean_minutes, 15.0).max(15.0)
}

/// Draw `config.n_records` synthetic cases together with their ground truth.
pub fn generate_records(config: &GeneratorConfig) -> Result<(Vec<SurgeryRecord>, Vec<TruthRow>)> {
    let latents = config.latents()?;
    let fx = &config.effects;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let proc_ix = weighted(latents.procedures.iter().map(|p| p.frequency));
    let surg_ix = weighted(latents.surgeons.iter().map(|s| s.frequency));
    let room_ix = weighted((1..=latents.locations.len()).map(|i| 1.0 / (i as f64).sqrt()));
    let class_ix = weighted(CLASS_WEIGHTS);
    let asa_ix = weighted(ASA_WEIGHTS);
    let anes_ix = weighted(ANESTHESIA_WEIGHTS);
    let day_ix = weighted(DAY_WEIGHTS);
    let start_ix = weighted(START_WEIGHTS);
    let age_dist = Normal::<f64>::new(52.0, 18.0).unwrap();
    let std_normal = Normal::<f64>::new(0.0, 1.0).unwrap();

    let mut records = Vec::with_capacity(config.n_records);
    let mut truth = Vec::with_capacity(config.n_records);
    for i in 0..config.n_records {
        let proc = &latents.procedures[proc_ix.sample(&mut rng)];
        let surgeon = &latents.surgeons[surg_ix.sample(&mut rng)];
        let (room, room_mult) = &latents.locations[room_ix.sample(&mut rng)];
        let class_i = class_ix.sample(&mut rng);
        let emergency = matches!(PATIENT_CLASSES[class_i], "Emergency" | "Trauma");
        let asa = asa_ix.sample(&mut rng) as u8 + 1;
        let anes_i = anes_ix.sample(&mut rng);
        let female = rng.random_bool(0.55);
        let age = age_dist.sample(&mut rng).clamp(1.0, 99.0).round();
        let height = if female { 162.0 } else { 176.0 } + 7.0 * std_normal.sample(&mut rng);
        let bmi = (27.0 + 5.0 * std_normal.sample(&mut rng)).clamp(15.0, 60.0);
        let weight = bmi * (height / 100.0).powi(2);
        let start = if emergency && rng.random_bool(0.5) {
            f64::from(rng.random_range(0u32..96)) * 0.25
        } else {
            7.0 + start_ix.sample(&mut rng) as f64 + f64::from(rng.random_range(0u32..4)) * 0.25
        };
        let day = DAYS[day_ix.sample(&mut rng)];
        let month = rng.random_range(1u8..=12);
        let mut comorbidities = [false; 14];
        for (c, p) in comorbidities.iter_mut().zip(COMORBIDITY_PREVALENCE) {
            *c = rng.random_bool(p);
        }

        let mut log_effect = fx.asa_per_level * f64::from(asa - 1)
            + fx.anesthesia[anes_i]
            + fx.age_per_year_over_50 * (age - 50.0).max(0.0)
            + fx.bmi_per_unit_over_30 * (bmi - 30.0).max(0.0);
        if emergency {
            log_effect += fx.emergency;
        }
        if female {
            log_effect += fx.female;
        }
        if start >= 15.0 {
            log_effect += fx.late_start;
        }
        for (c, e) in comorbidities.iter().zip(fx.comorbidities) {
            if *c {
                log_effect += e;
            }
        }
        let mean = proc.base_mean_minutes * surgeon.speed * room_mult * log_effect.exp();
        let sd = config.sigma_at(proc.variability, asa, emergency);
        let shape = (mean / sd).powi(2);
        let scale = sd * sd / mean;
        let gamma = Gamma::new(shape, scale).expect("positive gamma parameters");
        let mut duration = gamma.sample(&mut rng).round().max(1.0);
        let clerical = rng.random_bool(config.clerical_error_fraction);
        if clerical {
            duration = if rng.random_bool(0.6) {
                f64::from(rng.random_range(0u32..5))
            } else {
                f64::from(rng.random_range(1441u32..=3000))
            };
        }

        let mut blank = || rng.random_bool(config.missing_fraction);
        let (w_missing, h_missing, s_missing) = (blank(), blank(), blank());
        let id = i as u64 + 1;
        records.push(SurgeryRecord {
            id,
            age_years: age,
            female,
            weight_kg: (!w_missing).then(|| round_to(weight, 0.1)),
            height_cm: (!h_missing).then(|| round_to(height, 0.1)),
            start_hour: (!s_missing).then_some(start),
            day_of_week: day.to_string(),
            month,
            location: room.clone(),
            patient_class: PATIENT_CLASSES[class_i].to_string(),
            asa,
            anesthesia: ANESTHESIA_TYPES[anes_i].to_string(),
            surgeon_id: surgeon.id.clone(),
            procedure_id: proc.id.clone(),
            comorbidities,
            duration_minutes: duration,
            scheduled_minutes: scheduled_minutes_for(proc.base_mean_minutes),
        });
        truth.push(TruthRow {
            id,
            shape_k: shape,
            scale_phi_hours: scale / 60.0,
            mean_hours: mean / 60.0,
            sd_hours: sd / 60.0,
            clerical_error: clerical,
        });
    }
    Ok((records, truth))
}

/// Per-procedure record counts, most frequent first.
pub fn procedure_counts(records: &[SurgeryRecord]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(&r.procedure_id).or_default() += 1;
    }
    let mut v: Vec<(String, usize)> = counts.into_iter().map(|(k, n)| (k.to_string(), n)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}
