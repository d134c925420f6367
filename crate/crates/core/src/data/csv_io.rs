use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{SurgeryRecord, COMORBIDITIES};

/// Fixed column order of the corpus CSV.
pub fn record_header() -> Vec<&'static str> {
    let mut h = vec![
        "id",
        "age_years",
        "sex",
        "weight_kg",
        "height_cm",
        "start_time",
        "day_of_week",
        "month",
        "location",
        "patient_class",
        "asa",
        "anesthesia",
        "surgeon_id",
        "procedure_id",
    ];
    h.extend(COMORBIDITIES);
    h.extend(["duration_minutes", "scheduled_minutes"]);
    h
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn format_start(h: f64) -> String {
    let total = (h * 60.0).round() as i64;
    format!("{:02}:{:02}", total / 60, total % 60)
}

fn parse_start(s: &str) -> Option<f64> {
    let (h, m) = s.split_once(':')?;
    let h: f64 = h.trim().parse().ok()?;
    let m: f64 = m.trim().parse().ok()?;
    if !(0.0..24.0).contains(&h) || !(0.0..60.0).contains(&m) {
        return None;
    }
    Some(h + m / 60.0)
}

pub fn write_records<W: Write>(out: W, records: &[SurgeryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(record_header())?;
    for r in records {
        let mut row = vec![
            r.id.to_string(),
            r.age_years.to_string(),
            if r.female { "F" } else { "M" }.to_string(),
            opt_num(r.weight_kg),
            opt_num(r.height_cm),
            r.start_hour.map(format_start).unwrap_or_default(),
            r.day_of_week.clone(),
            r.month.to_string(),
            r.location.clone(),
            r.patient_class.clone(),
            r.asa.to_string(),
            r.anesthesia.clone(),
            r.surgeon_id.clone(),
            r.procedure_id.clone(),
        ];
        row.extend(
            r.comorbidities
                .iter()
                .map(|&c| if c { "1" } else { "0" }.to_string()),
        );
        row.push(r.duration_minutes.to_string());
        row.push(r.scheduled_minutes.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<SurgeryRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let expected = record_header();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Data(format!(
            "unexpected CSV header; expected columns: {}",
            expected.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |col: &str, v: &str| Error::Data(format!("line {line}: invalid {col} `{v}`"));
        let num = |idx: usize| -> Result<f64> {
            let v = &row[idx];
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(expected[idx], v))
        };
        let opt = |idx: usize| -> Result<Option<f64>> {
            if row[idx].trim().is_empty() {
                Ok(None)
            } else {
                num(idx).map(Some)
            }
        };
        let small = |idx: usize| -> Result<u8> {
            row[idx]
                .trim()
                .parse::<u8>()
                .map_err(|_| bad(expected[idx], &row[idx]))
        };
        let female = match row[2].trim() {
            "F" | "f" | "1" => true,
            "M" | "m" | "0" => false,
            v => return Err(bad("sex", v)),
        };
        let start_hour = match row[5].trim() {
            "" => None,
            v => Some(parse_start(v).ok_or_else(|| bad("start_time", v))?),
        };
        let mut comorbidities = [false; 14];
        for (j, c) in comorbidities.iter_mut().enumerate() {
            *c = match row[14 + j].trim() {
                "1" | "true" => true,
                "0" | "false" | "" => false,
                v => return Err(bad(COMORBIDITIES[j], v)),
            };
        }
        out.push(SurgeryRecord {
            id: row[0].trim().parse().map_err(|_| bad("id", &row[0]))?,
            age_years: num(1)?,
            female,
            weight_kg: opt(3)?,
            height_cm: opt(4)?,
            start_hour,
            day_of_week: row[6].to_string(),
            month: small(7)?,
            location: row[8].to_string(),
            patient_class: row[9].to_string(),
            asa: small(10)?,
            anesthesia: row[11].to_string(),
            surgeon_id: row[12].to_string(),
            procedure_id: row[13].to_string(),
            comorbidities,
            duration_minutes: num(28)?,
            scheduled_minutes: num(29)?,
        });
    }
    Ok(out)
}

pub fn write_records_file(path: &Path, records: &[SurgeryRecord]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_records(std::io::BufWriter::new(f), records)
}

pub fn read_records_file(path: &Path) -> Result<Vec<SurgeryRecord>> {
    let f =
        std::fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_records(std::io::BufReader::new(f))
}

/// Generator ground truth for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub id: u64,
    pub shape_k: f64,
    pub scale_phi_hours: f64,
    pub mean_hours: f64,
    pub sd_hours: f64,
    /// Duration was overwritten by a simulated logging error.
    pub clerical_error: bool,
}

pub fn write_truth<W: Write>(out: W, rows: &[TruthRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(input: R) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    Ok(rdr
        .deserialize()
        .collect::<std::result::Result<Vec<TruthRow>, _>>()?)
}
