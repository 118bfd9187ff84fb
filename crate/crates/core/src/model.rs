//! The forward model.
//!
//! Full-cell voltage on the shared capacity axis `q` is the difference of
//! the two half-cell potentials evaluated at their window-relative
//! stoichiometries:
//!
//! ```text
//! x(q) = x0 + q / Qn        y(q) = y0 - q / Qp
//! V(q) = U_pos(y(q)) - U_neg(x(q))
//! dV/dq = -U_pos'(y) / Qp - U_neg'(x) / Qn
//! ```
//!
//! `q = 0` is the fully discharged cell and `q = Q_full` the fully charged
//! one. Negative `q` is a virtual capacity below the discharged state.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CapacityUnit, ReferencePotentialCurve};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("capacities must be positive (Qn = {qn}, Qp = {qp}, Q_full = {q_full})")]
    NonPositiveCapacity { qn: f64, qp: f64, q_full: f64 },
    #[error("infeasible stoichiometry window: x100 = {x100}, y100 = {y100}, x0 = {x0}, y0 = {y0}")]
    Infeasible { x0: f64, y0: f64, x100: f64, y100: f64 },
    #[error("stoichiometry leaves [0, 1] at q = {q} (x = {x}, y = {y})")]
    OutOfDomain { q: f64, x: f64, y: f64 },
}

/// Fitted electrode parameters `{Qn, Qp, x0, y0}` plus the measured
/// full-cell capacity, which is data rather than a fitted quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeParams {
    pub qn_tilde: f64,
    pub qp_tilde: f64,
    pub x0_tilde: f64,
    pub y0_tilde: f64,
    pub q_full: f64,
    #[serde(default)]
    pub unit: CapacityUnit,
}

/// Stoichiometries at one point on the capacity axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoichPair {
    pub x_tilde: f64,
    pub y_tilde: f64,
    pub q: f64,
}

impl ElectrodeParams {
    pub fn new(qn_tilde: f64, qp_tilde: f64, x0_tilde: f64, y0_tilde: f64, q_full: f64) -> Self {
        Self {
            qn_tilde,
            qp_tilde,
            x0_tilde,
            y0_tilde,
            q_full,
            unit: CapacityUnit::AmpHour,
        }
    }

    /// The four fitted quantities in fitting order `[Qn, Qp, x0, y0]`.
    pub fn fitted(&self) -> [f64; 4] {
        [self.qn_tilde, self.qp_tilde, self.x0_tilde, self.y0_tilde]
    }

    pub fn with_fitted(&self, p: [f64; 4]) -> Self {
        Self {
            qn_tilde: p[0],
            qp_tilde: p[1],
            x0_tilde: p[2],
            y0_tilde: p[3],
            ..*self
        }
    }

    /// Multiplies every capacity (`Qn`, `Qp`, `Q_full`) by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            qn_tilde: self.qn_tilde * k,
            qp_tilde: self.qp_tilde * k,
            q_full: self.q_full * k,
            ..*self
        }
    }

    pub fn x_of_q(&self, q: f64) -> f64 {
        self.x0_tilde + q / self.qn_tilde
    }

    pub fn y_of_q(&self, q: f64) -> f64 {
        self.y0_tilde - q / self.qp_tilde
    }

    pub fn q_of_x(&self, x: f64) -> f64 {
        self.qn_tilde * (x - self.x0_tilde)
    }

    pub fn q_of_y(&self, y: f64) -> f64 {
        self.qp_tilde * (self.y0_tilde - y)
    }

    pub fn stoich_at(&self, q: f64) -> StoichPair {
        StoichPair {
            x_tilde: self.x_of_q(q),
            y_tilde: self.y_of_q(q),
            q,
        }
    }

    /// `x100 - 1`, `-y100`, `-x0` and `y0 - 1` all non-positive.
    pub fn is_feasible(&self) -> bool {
        let c = self.stoich_at(self.q_full);
        self.x0_tilde >= 0.0 && self.y0_tilde <= 1.0 && c.x_tilde <= 1.0 && c.y_tilde >= 0.0
    }

    /// Feasible with slack on the charged-state bounds (`x100 < 1`,
    /// `y100 > 0`).
    pub fn is_strictly_feasible(&self) -> bool {
        let c = self.stoich_at(self.q_full);
        self.x0_tilde >= 0.0 && self.y0_tilde <= 1.0 && c.x_tilde < 1.0 && c.y_tilde > 0.0
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.qn_tilde) || !positive(self.qp_tilde) || !positive(self.q_full) {
            return Err(ModelError::NonPositiveCapacity {
                qn: self.qn_tilde,
                qp: self.qp_tilde,
                q_full: self.q_full,
            });
        }
        if !self.is_feasible() {
            let c = self.stoich_at(self.q_full);
            return Err(ModelError::Infeasible {
                x0: self.x0_tilde,
                y0: self.y0_tilde,
                x100: c.x_tilde,
                y100: c.y_tilde,
            });
        }
        Ok(())
    }

    /// `(x100, y100)`: stoichiometries of the fully charged cell.
    pub fn charged_stoichiometries(&self) -> Result<StoichPair, ModelError> {
        self.validate()?;
        Ok(self.stoich_at(self.q_full))
    }

    /// Range of `q` over which both stoichiometries stay in `[0, 1]`.
    pub fn q_domain(&self) -> (f64, f64) {
        let lo = (-self.x0_tilde * self.qn_tilde).max((self.y0_tilde - 1.0) * self.qp_tilde);
        let hi = ((1.0 - self.x0_tilde) * self.qn_tilde).min(self.y0_tilde * self.qp_tilde);
        (lo, hi)
    }
}

fn in_domain(p: &ElectrodeParams, q: f64) -> Result<StoichPair, ModelError> {
    let s = p.stoich_at(q);
    if (0.0..=1.0).contains(&s.x_tilde) && (0.0..=1.0).contains(&s.y_tilde) {
        Ok(s)
    } else {
        Err(ModelError::OutOfDomain {
            q,
            x: s.x_tilde,
            y: s.y_tilde,
        })
    }
}

/// Full-cell voltage at a single capacity.
pub fn voltage_at(
    p: &ElectrodeParams,
    q: f64,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<f64, ModelError> {
    let s = in_domain(p, q)?;
    // in_domain guarantees both lookups succeed
    let up = u_pos.potential_at(s.y_tilde).unwrap_or(f64::NAN);
    let un = u_neg.potential_at(s.x_tilde).unwrap_or(f64::NAN);
    Ok(up - un)
}

/// `U_pos(y(q)) - U_neg(x(q))` over `q_grid`. Fails on the first grid point
/// whose stoichiometries leave `[0, 1]`.
pub fn predict_voltage(
    p: &ElectrodeParams,
    q_grid: &[f64],
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<Vec<f64>, ModelError> {
    if p.qn_tilde <= 0.0 || p.qp_tilde <= 0.0 {
        return Err(ModelError::NonPositiveCapacity {
            qn: p.qn_tilde,
            qp: p.qp_tilde,
            q_full: p.q_full,
        });
    }
    q_grid.iter().map(|&q| voltage_at(p, q, u_pos, u_neg)).collect()
}

/// Per-electrode contributions to `dV/dq`: `(-U_pos'(y)/Qp, -U_neg'(x)/Qn)`.
/// Both are non-negative for monotone reference curves and sum to `dV/dq`.
pub fn predict_dvdq_components(
    p: &ElectrodeParams,
    q_grid: &[f64],
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut pos = Vec::with_capacity(q_grid.len());
    let mut neg = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let s = in_domain(p, q)?;
        let dp = u_pos.slope_at(s.y_tilde).unwrap_or(f64::NAN);
        let dn = u_neg.slope_at(s.x_tilde).unwrap_or(f64::NAN);
        pos.push(-dp / p.qp_tilde);
        neg.push(-dn / p.qn_tilde);
    }
    Ok((pos, neg))
}

/// Analytic `dV/dq` from the interpolant slopes (chain rule through `x(q)`
/// and `y(q)`).
pub fn predict_dvdq(
    p: &ElectrodeParams,
    q_grid: &[f64],
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<Vec<f64>, ModelError> {
    let (pos, neg) = predict_dvdq_components(p, q_grid, u_pos, u_neg)?;
    Ok(pos.iter().zip(&neg).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{ElectrodeRole, ReferenceMeta, SweepDirection};

    fn linear_curve(role: ElectrodeRole, top: f64, drop: f64) -> ReferencePotentialCurve {
        let s: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let u = s.iter().map(|x| top - drop * x).collect();
        ReferencePotentialCurve::from_stoichiometry(
            s,
            u,
            ReferenceMeta {
                role,
                direction: SweepDirection::Lithiation,
                c_rate: 0.02,
                window: (top - drop - 0.1, top),
            },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn stoichiometry_transforms() {
        let p = ElectrodeParams::new(1.0, 1.0, 0.0, 1.0, 0.8);
        assert_eq!(p.x_of_q(0.5), 0.5);
        assert_eq!(p.y_of_q(0.25), 0.75);
        let p = ElectrodeParams::new(1.0, 1.0, 0.25, 1.0, 0.5);
        assert_eq!(p.x_of_q(0.0), 0.25);
        assert_eq!(p.q_of_x(0.0), -0.25);
        assert_eq!(p.q_of_x(0.25), 0.0);
    }

    #[test]
    fn hand_checked_stoichiometries() {
        let p = ElectrodeParams::new(2.70, 2.66, 0.02, 0.93, 2.30);
        // 0.02 + 2.30 / 2.70 and 0.93 - 2.30 / 2.66
        assert!((p.x_of_q(2.30) - 0.871_851_851_851_851_9).abs() < 1e-12);
        assert!((p.y_of_q(2.30) - 0.065_338_345_864_661_7).abs() < 1e-12);
        let c = p.charged_stoichiometries().unwrap();
        assert!((c.x_tilde - 0.87185).abs() < 1e-5);
        assert!((c.y_tilde - 0.06534).abs() < 1e-5);
    }

    #[test]
    fn charged_state_edge_cases() {
        let p = ElectrodeParams::new(1.0, 1.0, 0.0, 1.0, 0.8);
        let c = p.charged_stoichiometries().unwrap();
        assert_eq!((c.x_tilde, c.y_tilde), (0.8, 0.19999999999999996));
        let bad = ElectrodeParams::new(1.0, 1.0, 0.3, 1.0, 0.8);
        assert!(matches!(bad.charged_stoichiometries(), Err(ModelError::Infeasible { .. })));
    }

    #[test]
    fn flat_curves_give_constant_voltage() {
        let up = linear_curve(ElectrodeRole::Positive, 4.0, 0.0);
        let un = linear_curve(ElectrodeRole::Negative, 0.1, 0.0);
        let p = ElectrodeParams::new(1.0, 1.0, 0.0, 1.0, 0.9);
        let q = [0.0, 0.3, 0.9];
        for v in predict_voltage(&p, &q, &up, &un).unwrap() {
            assert!((v - 3.9).abs() < 1e-15);
        }
        for d in predict_dvdq(&p, &q, &up, &un).unwrap() {
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn linear_curves_hand_evaluation() {
        let up = linear_curve(ElectrodeRole::Positive, 4.2, 0.8);
        let un = linear_curve(ElectrodeRole::Negative, 0.6, 0.5);
        let p = ElectrodeParams::new(1.0, 1.0, 0.0, 1.0, 1.0);
        let v = predict_voltage(&p, &[0.5], &up, &un).unwrap();
        assert!((v[0] - 3.45).abs() < 1e-12);
        for d in predict_dvdq(&p, &[0.0, 0.37, 0.5, 1.0], &up, &un).unwrap() {
            assert!((d - 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_domain_reports_first_q() {
        let up = linear_curve(ElectrodeRole::Positive, 4.2, 0.8);
        let un = linear_curve(ElectrodeRole::Negative, 0.6, 0.5);
        let p = ElectrodeParams::new(1.0, 2.0, 0.2, 1.0, 0.9);
        let err = predict_voltage(&p, &[0.0, 0.5, 0.8, 0.9], &up, &un).unwrap_err();
        match err {
            ModelError::OutOfDomain { q, .. } => assert_eq!(q, 0.9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn q_domain_bounds() {
        let p = ElectrodeParams::new(2.0, 3.0, 0.1, 0.9, 1.0);
        let (lo, hi) = p.q_domain();
        assert!((lo - (-0.2f64).max(-0.3)).abs() < 1e-15);
        assert!((hi - 1.8f64.min(2.7)).abs() < 1e-15);
    }
}
