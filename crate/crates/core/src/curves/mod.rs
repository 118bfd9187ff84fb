//! Curve types and the numerical substrate shared by every other module.

mod interp;
mod reference;
mod savgol;
mod series;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use interp::MonotoneCubic;
pub use reference::{build_reference_curve, ReferenceMeta, ReferencePotentialCurve};
pub use series::{
    capacity_at_rate_check, differentiate, resample, smooth, CapacityVoltageSeries, RateCheck,
    SeriesMeta,
};

/// Fraction of rows allowed to run backwards in capacity before ingestion
/// gives up on repairing the log.
pub const MAX_RETROGRADE_FRACTION: f64 = 0.05;

/// Slack on the declared half-cell voltage window, in volts.
pub const WINDOW_SLACK_V: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("need at least {required} points, found {found}")]
    TooFewPoints { found: usize, required: usize },
    #[error("column lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("{} of {total} rows run backwards in capacity (rows {rows:?})", rows.len())]
    Retrograde { rows: Vec<usize>, total: usize },
    #[error("capacity column spans zero range")]
    DegenerateCapacity,
    #[error("capacity not strictly increasing at index {index}")]
    NotStrictlyIncreasing { index: usize },
    #[error("capacity must start at zero, found {first}")]
    NonZeroOrigin { first: f64 },
    #[error("potential increases with stoichiometry at node {index}")]
    NonMonotonePotential { index: usize },
    #[error("invalid voltage window ({lo}, {hi})")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("potential {potential} V lies outside declared window ({lo}, {hi}) V")]
    OutsideWindow { potential: f64, lo: f64, hi: f64 },
    #[error("stoichiometry {stoichiometry} outside [0, 1]")]
    Domain { stoichiometry: f64 },
    #[error("invalid smoothing configuration: {0}")]
    InvalidSmoothing(String),
    #[error("window of {window} samples exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("capacity spacing ratio {ratio:.3} exceeds 1.5; resample first")]
    NonUniformGrid { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectrodeRole {
    Positive,
    Negative,
}

/// Current direction of a half-cell measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    Lithiation,
    Delithiation,
}

/// Current direction of a full-cell measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentDirection {
    Charge,
    Discharge,
}

impl CurrentDirection {
    /// Half-cell sweep directions that match this full-cell direction, as
    /// `(positive, negative)`. Charging delithiates the positive electrode
    /// and lithiates the negative.
    pub fn matching_sweeps(self) -> (SweepDirection, SweepDirection) {
        match self {
            CurrentDirection::Charge => (SweepDirection::Delithiation, SweepDirection::Lithiation),
            CurrentDirection::Discharge => {
                (SweepDirection::Lithiation, SweepDirection::Delithiation)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityUnit {
    #[default]
    AmpHour,
    MilliAmpHourPerCm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub window_length: usize,
    pub poly_order: usize,
    pub enabled: bool,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            window_length: 25,
            poly_order: 3,
            enabled: true,
        }
    }
}

impl SmoothingConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        if self.window_length % 2 == 0 {
            return Err(CurveError::InvalidSmoothing(alloc::format!(
                "window length {} is even",
                self.window_length
            )));
        }
        if self.window_length < self.poly_order + 2 {
            return Err(CurveError::InvalidSmoothing(alloc::format!(
                "window length {} must be at least poly order + 2 = {}",
                self.window_length,
                self.poly_order + 2
            )));
        }
        Ok(())
    }
}

/// Sorts rows by capacity, averages rows sharing a capacity and rejects logs
/// where too many rows run backwards. Row order of the input does not affect
/// the result: descending logs are read as ascending ones, and ties are
/// broken on the value column before averaging.
pub(crate) fn clean_rows(
    capacity: &[f64],
    value: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), CurveError> {
    if capacity.len() != value.len() {
        return Err(CurveError::LengthMismatch {
            left: capacity.len(),
            right: value.len(),
        });
    }
    let n = capacity.len();
    if let Some(row) = (0..n).find(|&i| !capacity[i].is_finite() || !value[i].is_finite()) {
        return Err(CurveError::NonFinite { row });
    }
    if n < 2 {
        return Err(CurveError::TooFewPoints {
            found: n,
            required: 2,
        });
    }
    let descending = capacity[n - 1] < capacity[0];
    let retrograde: Vec<usize> = (1..n)
        .filter(|&i| {
            if descending {
                capacity[i] > capacity[i - 1]
            } else {
                capacity[i] < capacity[i - 1]
            }
        })
        .collect();
    if retrograde.len() as f64 > MAX_RETROGRADE_FRACTION * n as f64 {
        return Err(CurveError::Retrograde {
            rows: retrograde,
            total: n,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        capacity[a]
            .total_cmp(&capacity[b])
            .then(value[a].total_cmp(&value[b]))
    });

    let mut caps = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let c = capacity[order[i]];
        let mut sum = 0.0;
        let mut count = 0usize;
        while i < n && capacity[order[i]] == c {
            sum += value[order[i]];
            count += 1;
            i += 1;
        }
        caps.push(c);
        vals.push(if count == 1 { sum } else { sum / count as f64 });
    }
    Ok((caps, vals))
}
