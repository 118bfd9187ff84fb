use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{clean_rows, CurveError, ElectrodeRole, MonotoneCubic, SweepDirection, WINDOW_SLACK_V};

/// Acquisition metadata carried by every half-cell reference curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub role: ElectrodeRole,
    pub direction: SweepDirection,
    pub c_rate: f64,
    /// `(v_lo, v_hi)` in volts vs Li/Li+.
    pub window: (f64, f64),
}

/// Half-cell potential versus normalised stoichiometry `s ∈ [0, 1]`.
///
/// `s` is the lithiation fraction across the observed window: potential is
/// non-increasing in `s` for both electrodes. The interpolant is immutable
/// once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePotentialCurve {
    meta: ReferenceMeta,
    capacity_basis: f64,
    interp: MonotoneCubic,
}

/// Builds a reference curve from raw half-cell capacity (mAh) and potential
/// (V) columns.
///
/// Rows are sorted and de-duplicated first. Capacity is normalised onto
/// `[0, 1]`; if potential rises with capacity (a delithiation-capacity log)
/// the axis is mirrored so that `s` is always the lithiation fraction.
pub fn build_reference_curve(
    raw_capacity: &[f64],
    raw_potential: &[f64],
    meta: ReferenceMeta,
) -> Result<ReferencePotentialCurve, CurveError> {
    let (lo, hi) = meta.window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CurveError::InvalidWindow { lo, hi });
    }
    let (cap, pot) = clean_rows(raw_capacity, raw_potential)?;
    let n = cap.len();
    if n < 4 {
        return Err(CurveError::TooFewPoints {
            found: n,
            required: 4,
        });
    }
    let c_min = cap[0];
    let c_max = cap[n - 1];
    let span = c_max - c_min;
    if !(span > 0.0) {
        return Err(CurveError::DegenerateCapacity);
    }

    let (stoich, potential): (Vec<f64>, Vec<f64>) = if pot[n - 1] > pot[0] {
        cap.iter()
            .rev()
            .map(|c| (c_max - c) / span)
            .zip(pot.iter().rev().copied())
            .unzip()
    } else {
        (cap.iter().map(|c| (c - c_min) / span).collect(), pot)
    };

    from_normalized(stoich, potential, meta, span)
}

fn from_normalized(
    stoich: Vec<f64>,
    potential: Vec<f64>,
    meta: ReferenceMeta,
    capacity_basis: f64,
) -> Result<ReferencePotentialCurve, CurveError> {
    let n = stoich.len();
    if let Some(index) = (1..n).find(|&i| stoich[i] <= stoich[i - 1]) {
        return Err(CurveError::NotStrictlyIncreasing { index });
    }
    if let Some(index) = (1..n).find(|&i| potential[i] > potential[i - 1]) {
        return Err(CurveError::NonMonotonePotential { index });
    }
    let (lo, hi) = meta.window;
    for &p in &potential {
        if p < lo - WINDOW_SLACK_V || p > hi + WINDOW_SLACK_V {
            return Err(CurveError::OutsideWindow {
                potential: p,
                lo,
                hi,
            });
        }
    }
    Ok(ReferencePotentialCurve {
        meta,
        capacity_basis,
        interp: MonotoneCubic::new(stoich, potential),
    })
}

impl ReferencePotentialCurve {
    /// Builds a curve from an already-normalised grid (first node 0, last
    /// node 1), e.g. samples of an analytic potential function.
    pub fn from_stoichiometry(
        stoich: Vec<f64>,
        potential: Vec<f64>,
        meta: ReferenceMeta,
        capacity_basis: f64,
    ) -> Result<Self, CurveError> {
        if stoich.len() != potential.len() {
            return Err(CurveError::LengthMismatch {
                left: stoich.len(),
                right: potential.len(),
            });
        }
        if stoich.len() < 4 {
            return Err(CurveError::TooFewPoints {
                found: stoich.len(),
                required: 4,
            });
        }
        if let Some(row) = (0..stoich.len()).find(|&i| !stoich[i].is_finite() || !potential[i].is_finite()) {
            return Err(CurveError::NonFinite { row });
        }
        if stoich[0] != 0.0 {
            return Err(CurveError::Domain {
                stoichiometry: stoich[0],
            });
        }
        if stoich[stoich.len() - 1] != 1.0 {
            return Err(CurveError::Domain {
                stoichiometry: stoich[stoich.len() - 1],
            });
        }
        let (lo, hi) = meta.window;
        if !(lo < hi) {
            return Err(CurveError::InvalidWindow { lo, hi });
        }
        if !(capacity_basis > 0.0) {
            return Err(CurveError::DegenerateCapacity);
        }
        from_normalized(stoich, potential, meta, capacity_basis)
    }

    pub fn meta(&self) -> &ReferenceMeta {
        &self.meta
    }

    pub fn role(&self) -> ElectrodeRole {
        self.meta.role
    }

    /// Half-cell capacity (mAh) that was normalised onto `[0, 1]`.
    pub fn capacity_basis(&self) -> f64 {
        self.capacity_basis
    }

    pub fn stoich_grid(&self) -> &[f64] {
        self.interp.xs()
    }

    pub fn potential(&self) -> &[f64] {
        self.interp.ys()
    }

    /// Node capacities in mAh (`s * capacity_basis`).
    pub fn capacity_grid(&self) -> Vec<f64> {
        self.stoich_grid()
            .iter()
            .map(|s| s * self.capacity_basis)
            .collect()
    }

    /// Interpolated potential at stoichiometry `s`.
    pub fn potential_at(&self, s: f64) -> Result<f64, CurveError> {
        check_domain(s)?;
        Ok(self.interp.eval(s))
    }

    /// `dU/ds` of the interpolant.
    pub fn slope_at(&self, s: f64) -> Result<f64, CurveError> {
        check_domain(s)?;
        Ok(self.interp.derivative(s))
    }

    /// Value, slope and curvature with linear continuation outside `[0, 1]`.
    /// Only the penalised fitting objective evaluates off-domain.
    pub(crate) fn eval_extended(&self, s: f64) -> (f64, f64, f64) {
        self.interp.eval_extended(s)
    }

    /// `(min, max)` of the node potentials.
    pub fn potential_range(&self) -> (f64, f64) {
        let p = self.potential();
        (p[p.len() - 1], p[0])
    }
}

fn check_domain(s: f64) -> Result<(), CurveError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(CurveError::Domain { stoichiometry: s })
    }
}
