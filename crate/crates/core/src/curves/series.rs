use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::savgol::{finite_difference, savgol};
use super::{clean_rows, CapacityUnit, CurrentDirection, CurveError, MonotoneCubic, SmoothingConfig};

/// Minimum series length accepted by the fitting pipeline.
pub const MIN_SERIES_LEN: usize = 16;

/// Largest allowed ratio between the widest and narrowest capacity step
/// before smoothing refuses the series.
pub const MAX_SPACING_RATIO: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub direction: CurrentDirection,
    pub c_rate: f64,
    #[serde(default)]
    pub temperature_label: String,
    #[serde(default)]
    pub unit: CapacityUnit,
}

impl SeriesMeta {
    pub fn new(direction: CurrentDirection, c_rate: f64) -> Self {
        Self {
            direction,
            c_rate,
            temperature_label: String::new(),
            unit: CapacityUnit::AmpHour,
        }
    }
}

/// A measured full-cell curve on a strictly increasing capacity grid.
///
/// Capacity is oriented so that `q = 0` is the fully discharged state and
/// voltage rises with `q`, whichever direction the cell was cycled in; the
/// acquisition direction lives in [`SeriesMeta`].
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVoltageSeries {
    q: Vec<f64>,
    v: Vec<f64>,
    meta: SeriesMeta,
}

impl CapacityVoltageSeries {
    /// Wraps already-clean columns: equal length, finite, `q` strictly
    /// increasing.
    pub fn new(q: Vec<f64>, v: Vec<f64>, meta: SeriesMeta) -> Result<Self, CurveError> {
        if q.len() != v.len() {
            return Err(CurveError::LengthMismatch {
                left: q.len(),
                right: v.len(),
            });
        }
        if q.len() < 2 {
            return Err(CurveError::TooFewPoints {
                found: q.len(),
                required: 2,
            });
        }
        if let Some(row) = (0..q.len()).find(|&i| !q[i].is_finite() || !v[i].is_finite()) {
            return Err(CurveError::NonFinite { row });
        }
        if let Some(index) = (1..q.len()).find(|&i| q[i] <= q[i - 1]) {
            return Err(CurveError::NotStrictlyIncreasing { index });
        }
        Ok(Self { q, v, meta })
    }

    /// Ingests raw cycler columns: sorts and de-duplicates rows, mirrors
    /// discharge-style logs (voltage falling with capacity) so voltage rises
    /// with `q`, and shifts `q` to start at zero.
    pub fn from_raw(capacity: &[f64], voltage: &[f64], meta: SeriesMeta) -> Result<Self, CurveError> {
        let (mut q, mut v) = clean_rows(capacity, voltage)?;
        let n = q.len();
        if v[n - 1] < v[0] {
            let q_max = q[n - 1];
            q = q.iter().rev().map(|c| q_max - c).collect();
            v.reverse();
        } else {
            let q_min = q[0];
            for c in &mut q {
                *c -= q_min;
            }
        }
        Self::new(q, v, meta)
    }

    /// Checks the invariants the fitting pipeline relies on.
    pub fn validate(&self) -> Result<(), CurveError> {
        if self.q.len() < MIN_SERIES_LEN {
            return Err(CurveError::TooFewPoints {
                found: self.q.len(),
                required: MIN_SERIES_LEN,
            });
        }
        if self.q[0] != 0.0 {
            return Err(CurveError::NonZeroOrigin { first: self.q[0] });
        }
        Ok(())
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Full-cell capacity: the largest `q` of the series.
    pub fn q_full(&self) -> f64 {
        self.q[self.q.len() - 1]
    }

    /// Same grid, different voltages.
    pub fn with_voltage(&self, v: Vec<f64>) -> Result<Self, CurveError> {
        Self::new(self.q.clone(), v, self.meta.clone())
    }

    /// Ratio of the widest to the narrowest capacity step.
    pub fn spacing_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for w in self.q.windows(2) {
            let h = w[1] - w[0];
            lo = lo.min(h);
            hi = hi.max(h);
        }
        hi / lo
    }

    fn check_smoothable(&self, cfg: &SmoothingConfig) -> Result<(), CurveError> {
        cfg.validate()?;
        if cfg.window_length > self.len() {
            return Err(CurveError::WindowTooLong {
                window: cfg.window_length,
                len: self.len(),
            });
        }
        let ratio = self.spacing_ratio();
        if ratio > MAX_SPACING_RATIO {
            return Err(CurveError::NonUniformGrid { ratio });
        }
        Ok(())
    }
}

/// Savitzky-Golay smoothing of voltage over capacity. `q` is unchanged.
pub fn smooth(
    series: &CapacityVoltageSeries,
    cfg: &SmoothingConfig,
) -> Result<CapacityVoltageSeries, CurveError> {
    if !cfg.enabled {
        return Ok(series.clone());
    }
    series.check_smoothable(cfg)?;
    let (values, _) = savgol(&series.q, &series.v, cfg.window_length, cfg.poly_order);
    series.with_voltage(values)
}

/// `dV/dq` in volts per capacity unit, same length as the series.
/// Savitzky-Golay slope when smoothing is enabled, finite differences
/// otherwise.
pub fn differentiate(
    series: &CapacityVoltageSeries,
    cfg: &SmoothingConfig,
) -> Result<Vec<f64>, CurveError> {
    if !cfg.enabled {
        if series.len() < 3 {
            return Err(CurveError::TooFewPoints {
                found: series.len(),
                required: 3,
            });
        }
        return Ok(finite_difference(&series.q, &series.v));
    }
    series.check_smoothable(cfg)?;
    let (_, slopes) = savgol(&series.q, &series.v, cfg.window_length, cfg.poly_order);
    Ok(slopes)
}

/// Uniform grid of `n` points from `q[0]` to `q[end]`, voltage by monotone
/// cubic interpolation in `q`.
pub fn resample(series: &CapacityVoltageSeries, n: usize) -> Result<CapacityVoltageSeries, CurveError> {
    if n < MIN_SERIES_LEN {
        return Err(CurveError::TooFewPoints {
            found: n,
            required: MIN_SERIES_LEN,
        });
    }
    let interp = MonotoneCubic::new(series.q.clone(), series.v.clone());
    let q0 = series.q[0];
    let q1 = series.q_full();
    let span = q1 - q0;
    let q: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                q1
            } else {
                q0 + span * (i as f64) / ((n - 1) as f64)
            }
        })
        .collect();
    let v = q.iter().map(|&x| interp.eval(x)).collect();
    CapacityVoltageSeries::new(q, v, series.meta.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub pass: bool,
    pub ratio: f64,
}

/// Compares the capacity reached at a faster rate against a slower
/// reference run: `ratio = max(q_slow) / max(q_ref)`, passing when
/// `|1 - ratio| <= tol`. Both series should share a current direction.
pub fn capacity_at_rate_check(
    series_slow: &CapacityVoltageSeries,
    series_ref: &CapacityVoltageSeries,
    tol: f64,
) -> RateCheck {
    let ratio = series_slow.q_full() / series_ref.q_full();
    RateCheck {
        pass: (1.0 - ratio).abs() <= tol,
        ratio,
    }
}
