//! Diagnostics derived from fitted electrode parameters.
//!
//! With `x0, y0` the discharged-state stoichiometries and `Qn, Qp` the
//! window-relative electrode capacities:
//!
//! ```text
//! Q_SEI     = Qp·(1 - y0) - Qn·x0
//! Q_Li      = Qn·x0 + Qp·y0          = Qp·y100 + Q_full + Qn·x0
//! Qn_excess = Qn·(1 - x0) - Q_full
//! NPR_practical = 1 + Qn_excess / Q_full
//! ```
//!
//! so that `Qp = Q_Li + Q_SEI` holds identically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::CapacityUnit;
use crate::model::{ElectrodeParams, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid design parameters: {0}")]
    InvalidDesign(&'static str),
    #[error("invalid stoichiometry window: x in [{x_min}, {x_max}], y in [{y_min}, {y_max}]")]
    InvalidWindow { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    #[error("pristine {0} is zero")]
    ZeroPristine(&'static str),
    #[error("areal basis must be positive, found {0}")]
    InvalidArealBasis(f64),
    #[error("expected capacities in {expected:?}, found {found:?}")]
    UnitMismatch { expected: CapacityUnit, found: CapacityUnit },
}

/// Lithium inventory split by where it sits at the top of charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LithiumInventory {
    pub total: f64,
    /// `Qp·y100`: lithium left in the positive above the upper voltage limit.
    pub above_window: f64,
    /// `Q_full`: lithium cycled within the window.
    pub in_window: f64,
    /// `Qn·x0`: lithium left in the negative below the lower voltage limit.
    pub below_window: f64,
}

/// Capacities of a [`FeatureSet`] divided by an electrode area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArealFeatures {
    pub q_sei: f64,
    pub q_li: f64,
    pub qn_excess: f64,
    pub qn_tilde: f64,
    pub qp_tilde: f64,
    pub q_full: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub q_sei: f64,
    pub q_li: f64,
    pub q_li_components: LithiumInventory,
    pub qn_excess: f64,
    pub npr_practical: f64,
    pub npr_conventional: f64,
    pub x100_tilde: f64,
    pub y100_tilde: f64,
    pub q_full: f64,
    #[serde(default)]
    pub unit: CapacityUnit,
    /// Negative `q_sei`: more lithium than the positive can hold.
    pub q_sei_anomaly: bool,
    /// Negative `qn_excess`: negative electrode over-lithiated at top of
    /// charge.
    pub qn_excess_anomaly: bool,
    #[serde(default)]
    pub areal: Option<ArealFeatures>,
}

pub fn q_sei(theta: &ElectrodeParams) -> f64 {
    theta.qp_tilde * (1.0 - theta.y0_tilde) - theta.qn_tilde * theta.x0_tilde
}

pub fn q_li(theta: &ElectrodeParams) -> LithiumInventory {
    // equal to x0·Qn + y0·Qp; summing the parts keeps the split exact
    let above = theta.qp_tilde * theta.y_of_q(theta.q_full);
    let below = theta.qn_tilde * theta.x0_tilde;
    LithiumInventory {
        total: above + theta.q_full + below,
        above_window: above,
        in_window: theta.q_full,
        below_window: below,
    }
}

/// `(NPR_practical, Qn_excess)`.
pub fn npr_practical(theta: &ElectrodeParams) -> (f64, f64) {
    let excess = theta.qn_tilde * (1.0 - theta.x0_tilde) - theta.q_full;
    (1.0 + excess / theta.q_full, excess)
}

pub fn npr_conventional(theta: &ElectrodeParams) -> f64 {
    theta.qn_tilde / theta.qp_tilde
}

impl FeatureSet {
    /// Features of a feasible parameter set.
    pub fn from_theta(theta: &ElectrodeParams) -> Result<Self, FeatureError> {
        theta.validate()?;
        Ok(Self::from_theta_unchecked(theta))
    }

    /// Same closed forms without the feasibility check, for reporting on
    /// fits that ended outside the feasible region.
    pub fn from_theta_unchecked(theta: &ElectrodeParams) -> Self {
        let sei = q_sei(theta);
        let li = q_li(theta);
        let (npr, excess) = npr_practical(theta);
        let c = theta.stoich_at(theta.q_full);
        Self {
            q_sei: sei,
            q_li: li.total,
            q_li_components: li,
            qn_excess: excess,
            npr_practical: npr,
            npr_conventional: npr_conventional(theta),
            x100_tilde: c.x_tilde,
            y100_tilde: c.y_tilde,
            q_full: theta.q_full,
            unit: theta.unit,
            q_sei_anomaly: sei < 0.0,
            qn_excess_anomaly: excess < 0.0,
            areal: None,
        }
    }

    /// Attaches mAh/cm² values for Ah capacities spread over `basis_cm2`.
    pub fn with_areal(mut self, theta: &ElectrodeParams, basis_cm2: f64) -> Result<Self, FeatureError> {
        if !(basis_cm2 > 0.0) || !basis_cm2.is_finite() {
            return Err(FeatureError::InvalidArealBasis(basis_cm2));
        }
        if self.unit != CapacityUnit::AmpHour {
            return Err(FeatureError::UnitMismatch {
                expected: CapacityUnit::AmpHour,
                found: self.unit,
            });
        }
        let k = 1000.0 / basis_cm2;
        self.areal = Some(ArealFeatures {
            q_sei: self.q_sei * k,
            q_li: self.q_li * k,
            qn_excess: self.qn_excess * k,
            qn_tilde: theta.qn_tilde * k,
            qp_tilde: theta.qp_tilde * k,
            q_full: self.q_full * k,
        });
        Ok(self)
    }
}

/// Cell design data for one electrode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Areal loading, mg/cm².
    pub loading_mg_per_cm2: f64,
    pub active_fraction: f64,
    pub n_faces: u32,
    /// cm² per coated face.
    pub area_per_face_cm2: f64,
    /// mAh/g.
    pub specific_capacity_mah_per_g: f64,
}

impl DesignParams {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.loading_mg_per_cm2) {
            return Err(FeatureError::InvalidDesign("loading must be positive"));
        }
        if !(self.active_fraction > 0.0 && self.active_fraction <= 1.0) {
            return Err(FeatureError::InvalidDesign("active fraction must lie in (0, 1]"));
        }
        if self.n_faces == 0 {
            return Err(FeatureError::InvalidDesign("n_faces must be positive"));
        }
        if !pos(self.area_per_face_cm2) {
            return Err(FeatureError::InvalidDesign("area per face must be positive"));
        }
        if !pos(self.specific_capacity_mah_per_g) {
            return Err(FeatureError::InvalidDesign("specific capacity must be positive"));
        }
        Ok(())
    }

    /// Total coated area, cm².
    pub fn areal_basis(&self) -> f64 {
        self.n_faces as f64 * self.area_per_face_cm2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalCapacity {
    pub total_ah: f64,
    pub areal_mah_per_cm2: f64,
}

/// `m·f·Q_theor` per cm², and that times the coated area for the total.
pub fn theoretical_capacity(d: &DesignParams) -> Result<TheoreticalCapacity, FeatureError> {
    d.validate()?;
    // mg/cm² · mAh/g = µAh/cm²
    let areal = d.loading_mg_per_cm2 * d.active_fraction * d.specific_capacity_mah_per_g / 1000.0;
    Ok(TheoreticalCapacity {
        total_ah: areal * d.areal_basis() / 1000.0,
        areal_mah_per_cm2: areal,
    })
}

/// Design negative-to-positive ratio from active-material areal capacities.
pub fn npr_theoretical(pos: &DesignParams, neg: &DesignParams) -> Result<f64, FeatureError> {
    let p = theoretical_capacity(pos)?;
    let n = theoretical_capacity(neg)?;
    Ok(n.areal_mah_per_cm2 / p.areal_mah_per_cm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedFraction {
    pub positive: f64,
    pub negative: f64,
}

/// Fitted areal capacity over theoretical areal capacity, per electrode.
/// `theta` must carry areal capacities (mAh/cm²).
pub fn observed_fraction(
    theta: &ElectrodeParams,
    d_pos: &DesignParams,
    d_neg: &DesignParams,
) -> Result<ObservedFraction, FeatureError> {
    if theta.unit != CapacityUnit::MilliAmpHourPerCm2 {
        return Err(FeatureError::UnitMismatch {
            expected: CapacityUnit::MilliAmpHourPerCm2,
            found: theta.unit,
        });
    }
    let p = theoretical_capacity(d_pos)?;
    let n = theoretical_capacity(d_neg)?;
    Ok(ObservedFraction {
        positive: theta.qp_tilde / p.areal_mah_per_cm2,
        negative: theta.qn_tilde / n.areal_mah_per_cm2,
    })
}

/// True-stoichiometry window covered by the half-cell references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionInputs {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl CorrectionInputs {
    pub const FULL_RANGE: Self = Self {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };

    pub fn validate(&self) -> Result<(), FeatureError> {
        let ok = |lo: f64, hi: f64| lo >= 0.0 && lo < hi && hi <= 1.0;
        if ok(self.x_min, self.x_max) && ok(self.y_min, self.y_max) {
            Ok(())
        } else {
            Err(FeatureError::InvalidWindow {
                x_min: self.x_min,
                x_max: self.x_max,
                y_min: self.y_min,
                y_max: self.y_max,
            })
        }
    }
}

/// How to pin absolute true stoichiometries, which the window-relative fit
/// alone does not determine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// Tilde 0 maps to the window minimum and tilde 1 to the maximum:
    /// `x = x_min + x̃·(x_max - x_min)`, likewise for `y`.
    WindowEndpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchoredStoichiometry {
    pub anchor: Anchor,
    pub x0: f64,
    pub x100: f64,
    pub y0: f64,
    pub y100: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedParams {
    pub qn: f64,
    pub qp: f64,
    /// `x100 - x0` on the true scale.
    pub x_span: f64,
    /// `y0 - y100` on the true scale.
    pub y_span: f64,
    /// Present only when an anchor was supplied.
    pub anchored: Option<AnchoredStoichiometry>,
}

/// Maps window-relative capacities and stoichiometry spans to the true
/// scale: `Q = Q̃ / (s_max - s_min)`, `span = spañ · (s_max - s_min)`.
pub fn correct_to_true(
    theta: &ElectrodeParams,
    c: &CorrectionInputs,
    anchor: Option<Anchor>,
) -> Result<CorrectedParams, FeatureError> {
    c.validate()?;
    let dx = c.x_max - c.x_min;
    let dy = c.y_max - c.y_min;
    let s = theta.stoich_at(theta.q_full);
    let anchored = anchor.map(|a| match a {
        Anchor::WindowEndpoints => AnchoredStoichiometry {
            anchor: a,
            x0: c.x_min + theta.x0_tilde * dx,
            x100: c.x_min + s.x_tilde * dx,
            y0: c.y_min + theta.y0_tilde * dy,
            y100: c.y_min + s.y_tilde * dy,
        },
    });
    Ok(CorrectedParams {
        qn: theta.qn_tilde / dx,
        qp: theta.qp_tilde / dy,
        x_span: (s.x_tilde - theta.x0_tilde) * dx,
        y_span: (theta.y0_tilde - s.y_tilde) * dy,
        anchored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationMetrics {
    pub lam_pe: f64,
    pub lam_ne: f64,
    pub lli: f64,
    /// Set when any metric is negative (aged capacity above pristine).
    pub anomaly: bool,
}

/// Loss of active material per electrode and loss of lithium inventory
/// between two fitted states.
pub fn degradation(pristine: &ElectrodeParams, aged: &ElectrodeParams) -> Result<DegradationMetrics, FeatureError> {
    if pristine.qn_tilde == 0.0 {
        return Err(FeatureError::ZeroPristine("qn_tilde"));
    }
    if pristine.qp_tilde == 0.0 {
        return Err(FeatureError::ZeroPristine("qp_tilde"));
    }
    let li0 = q_li(pristine).total;
    if li0 == 0.0 {
        return Err(FeatureError::ZeroPristine("q_li"));
    }
    if pristine.unit != aged.unit {
        return Err(FeatureError::UnitMismatch {
            expected: pristine.unit,
            found: aged.unit,
        });
    }
    let lam_ne = 1.0 - aged.qn_tilde / pristine.qn_tilde;
    let lam_pe = 1.0 - aged.qp_tilde / pristine.qp_tilde;
    let lli = 1.0 - q_li(aged).total / li0;
    Ok(DegradationMetrics {
        lam_pe,
        lam_ne,
        lli,
        anomaly: lam_pe < 0.0 || lam_ne < 0.0 || lli < 0.0,
    })
}
