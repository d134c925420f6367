use serde::{Deserialize, Serialize};

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};

/// How a booked duration is derived from a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BookingStrategy {
    /// `ŷ + k` with `k` in minutes.
    Additive,
    /// `ŷ · k`.
    Multiplicative,
    /// The `k`-quantile of the predicted distribution.
    Percentile,
}

impl BookingStrategy {
    pub const ALL: [BookingStrategy; 3] = [Self::Additive, Self::Multiplicative, Self::Percentile];

    pub fn name(self) -> &'static str {
        match self {
            Self::Additive => "additive",
            Self::Multiplicative => "multiplicative",
            Self::Percentile => "percentile",
        }
    }

    /// Knob values: additive −30..=90 min by 5, multiplicative 0.6..=1.8 by
    /// 0.05, percentile 0.05..=0.95 by 0.05.
    pub fn default_grid(self) -> Vec<f64> {
        let steps = |lo: i32, hi: i32, div: f64| (lo..=hi).map(|i| f64::from(i) / div).collect();
        match self {
            Self::Additive => (-6..=18).map(|i| f64::from(i) * 5.0).collect(),
            Self::Multiplicative => steps(12, 36, 20.0),
            Self::Percentile => steps(1, 19, 20.0),
        }
    }
}

impl std::str::FromStr for BookingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "additive" => Ok(Self::Additive),
            "multiplicative" => Ok(Self::Multiplicative),
            "percentile" => Ok(Self::Percentile),
            other => Err(Error::config("booking", format!("unknown strategy `{other}`"))),
        }
    }
}

/// Model outputs a booking curve can be computed from.
#[derive(Debug, Clone, Copy)]
pub enum BookingInput<'a> {
    /// Point predictions in hours; no distribution available.
    Points(&'a [f64]),
    Distributions(&'a [PredictiveDistribution]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BookingPoint {
    pub knob: f64,
    pub overbooked_minutes: f64,
    pub underbooked_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookingCurve {
    pub strategy: BookingStrategy,
    pub points: Vec<BookingPoint>,
}

impl BookingCurve {
    /// Knob minimizing `c_over · over + c_under · under`; the first knob wins ties.
    pub fn optimal_knob(&self, cost_over: f64, cost_under: f64) -> Option<f64> {
        let cost = |p: &BookingPoint| cost_over * p.overbooked_minutes + cost_under * p.underbooked_minutes;
        let mut best: Option<&BookingPoint> = None;
        for p in &self.points {
            if best.is_none_or(|b| cost(p) < cost(b)) {
                best = Some(p);
            }
        }
        best.map(|p| p.knob)
    }
}

/// Total over- and under-booked minutes at each knob value.
pub fn booking_curve(
    input: BookingInput<'_>,
    labels_hours: &[f64],
    strategy: BookingStrategy,
    knobs: &[f64],
) -> Result<BookingCurve> {
    let n = match input {
        BookingInput::Points(p) => p.len(),
        BookingInput::Distributions(d) => d.len(),
    };
    if n != labels_hours.len() {
        return Err(Error::Shape {
            op: "booking_curve",
            expected: format!("{n} labels"),
            got: format!("{}", labels_hours.len()),
        });
    }
    let means: Vec<f64> = match input {
        BookingInput::Points(p) => p.to_vec(),
        BookingInput::Distributions(d) => d.iter().map(PredictiveDistribution::mean).collect(),
    };
    let mut points = Vec::with_capacity(knobs.len());
    for &k in knobs {
        let booked: Vec<f64> = match strategy {
            BookingStrategy::Additive => means.iter().map(|m| m + k / 60.0).collect(),
            BookingStrategy::Multiplicative => means.iter().map(|m| m * k).collect(),
            BookingStrategy::Percentile => {
                let BookingInput::Distributions(d) = input else {
                    return Err(Error::config(
                        "booking",
                        "percentile booking needs predictive distributions (fit a constant scale for point models)",
                    ));
                };
                if !(k > 0.0 && k < 1.0) {
                    return Err(Error::config("booking", format!("percentile {k} outside (0, 1)")));
                }
                d.iter().map(|d| d.quantile(k)).collect::<Result<_>>()?
            }
        };
        let (mut over, mut under) = (0.0, 0.0);
        for (b, y) in booked.iter().zip(labels_hours) {
            over += (b - y).max(0.0) * 60.0;
            under += (y - b).max(0.0) * 60.0;
        }
        points.push(BookingPoint {
            knob: k,
            overbooked_minutes: over,
            underbooked_minutes: under,
        });
    }
    Ok(BookingCurve { strategy, points })
}
