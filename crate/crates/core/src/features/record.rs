use serde::{Deserialize, Serialize};

/// Comorbidity flags, in column order.
pub const COMORBIDITIES: [&str; 14] = [
    "smoker",
    "afib",
    "ckd",
    "copd",
    "chf",
    "cad",
    "diabetes",
    "htn",
    "cirrhosis",
    "osa",
    "cardiac_device",
    "dialysis",
    "asthma",
    "dementia",
];

/// One row of a surgery log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryRecord {
    pub id: u64,
    pub age_years: f64,
    pub female: bool,
    pub weight_kg: Option<f64>,
    pub height_cm: Option<f64>,
    /// Start time as fractional hours since midnight (10:30 → 10.5).
    pub start_hour: Option<f64>,
    pub day_of_week: String,
    pub month: u8,
    pub location: String,
    pub patient_class: String,
    pub asa: u8,
    pub anesthesia: String,
    pub surgeon_id: String,
    pub procedure_id: String,
    pub comorbidities: [bool; 14],
    /// Realized duration.
    pub duration_minutes: f64,
    /// Booked duration under the current scheduling practice.
    pub scheduled_minutes: f64,
}

impl SurgeryRecord {
    /// Label used by every model: duration in hours.
    pub fn label_hours(&self) -> f64 {
        self.duration_minutes / 60.0
    }
}

/// Raw value of one schema field extracted from a record.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue<'a> {
    Number(Option<f64>),
    Category(Option<std::borrow::Cow<'a, str>>),
    Flag(bool),
}

impl SurgeryRecord {
    /// Look up a schema field by name. Unknown names yield `None`.
    pub fn field(&self, name: &str) -> Option<RawValue<'_>> {
        use std::borrow::Cow::{Borrowed, Owned};
        let v = match name {
            "age" => RawValue::Number(Some(self.age_years)),
            "sex" => RawValue::Flag(self.female),
            "weight" => RawValue::Number(self.weight_kg),
            "height" => RawValue::Number(self.height_cm),
            "hour" => RawValue::Number(self.start_hour),
            "day" => RawValue::Category(Some(Borrowed(&self.day_of_week))),
            "month" => RawValue::Category(Some(Owned(format!("{:02}", self.month)))),
            "location" => RawValue::Category(Some(Borrowed(&self.location))),
            "class" => RawValue::Category(Some(Borrowed(&self.patient_class))),
            "asa" => RawValue::Category(Some(Owned(self.asa.to_string()))),
            "anesthesia" => RawValue::Category(Some(Borrowed(&self.anesthesia))),
            "surgeon" => RawValue::Category(Some(Borrowed(&self.surgeon_id))),
            "procedure" => RawValue::Category(Some(Borrowed(&self.procedure_id))),
            other => {
                let i = COMORBIDITIES.iter().position(|c| *c == other)?;
                RawValue::Flag(self.comorbidities[i])
            }
        };
        Some(match v {
            RawValue::Category(Some(s)) if s.is_empty() => RawValue::Category(None),
            v => v,
        })
    }
}
