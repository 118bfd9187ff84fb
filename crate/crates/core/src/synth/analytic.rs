use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::curves::{CurveError, ElectrodeRole, ReferenceMeta, ReferencePotentialCurve, SweepDirection};

/// A localised potential step `-amplitude·tanh((s - center)/width)`. Steps
/// lower the potential monotonically and show up as peaks in dV/dq.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Step {
    fn value(&self, s: f64) -> f64 {
        -self.amplitude * libm::tanh((s - self.center) / self.width)
    }
}

/// Smooth, strictly decreasing half-cell potentials.
///
/// ```text
/// U(s) = base - slope·s + head·exp(-s/head_w) - tail·exp(-(1-s)/tail_w) + Σ steps
/// ```
///
/// The positive defaults are a layered-oxide-like sloping curve with no
/// distinct features; the negative defaults are graphite-like with two
/// staging steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCurve {
    pub base: f64,
    pub slope: f64,
    pub head: f64,
    pub head_width: f64,
    pub tail: f64,
    pub tail_width: f64,
    pub steps: Vec<Step>,
}

impl AnalyticCurve {
    pub fn positive() -> Self {
        Self {
            base: 4.35,
            slope: 0.85,
            head: 0.12,
            head_width: 0.08,
            tail: 0.25,
            tail_width: 0.06,
            steps: Vec::new(),
        }
    }

    pub fn negative() -> Self {
        Self {
            base: 0.16,
            slope: 0.05,
            head: 0.6,
            head_width: 0.04,
            tail: 0.03,
            tail_width: 0.03,
            steps: alloc::vec![
                Step {
                    amplitude: 0.025,
                    center: 0.3,
                    width: 0.06,
                },
                Step {
                    amplitude: 0.02,
                    center: 0.62,
                    width: 0.05,
                },
            ],
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.base - self.slope * s + self.head * libm::exp(-s / self.head_width)
            - self.tail * libm::exp(-(1.0 - s) / self.tail_width)
            + self.steps.iter().map(|st| st.value(s)).sum::<f64>()
    }

    /// `dU/ds`.
    pub fn derivative(&self, s: f64) -> f64 {
        let steps: f64 = self
            .steps
            .iter()
            .map(|st| {
                let c = libm::cosh((s - st.center) / st.width);
                -st.amplitude / (st.width * c * c)
            })
            .sum();
        -self.slope - self.head / self.head_width * libm::exp(-s / self.head_width)
            - self.tail / self.tail_width * libm::exp(-(1.0 - s) / self.tail_width)
            + steps
    }

    /// Samples `nodes` uniformly spaced stoichiometries into a reference
    /// curve whose declared window is the sampled potential range.
    pub fn sample(
        &self,
        role: ElectrodeRole,
        nodes: usize,
        capacity_basis: f64,
    ) -> Result<ReferencePotentialCurve, CurveError> {
        let last = nodes.max(2) - 1;
        let s: Vec<f64> = (0..=last).map(|i| i as f64 / last as f64).collect();
        let u: Vec<f64> = s.iter().map(|&x| self.eval(x)).collect();
        let meta = ReferenceMeta {
            role,
            // generated series are charge curves
            direction: match role {
                ElectrodeRole::Positive => SweepDirection::Delithiation,
                ElectrodeRole::Negative => SweepDirection::Lithiation,
            },
            c_rate: 0.05,
            window: (u[last], u[0]),
        };
        ReferencePotentialCurve::from_stoichiometry(s, u, meta, capacity_basis)
    }
}

/// Parameters of the built-in analytic curve pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticFamily {
    pub positive: AnalyticCurve,
    pub negative: AnalyticCurve,
    pub nodes: usize,
    /// Half-cell capacities (mAh) recorded as the curves' capacity basis.
    pub positive_capacity_mah: f64,
    pub negative_capacity_mah: f64,
}

impl Default for AnalyticFamily {
    fn default() -> Self {
        Self {
            positive: AnalyticCurve::positive(),
            negative: AnalyticCurve::negative(),
            nodes: 1001,
            positive_capacity_mah: 4.0,
            negative_capacity_mah: 4.5,
        }
    }
}

impl AnalyticFamily {
    /// `(U_pos, U_neg)`.
    pub fn build(&self) -> Result<(ReferencePotentialCurve, ReferencePotentialCurve), CurveError> {
        Ok((
            self.positive
                .sample(ElectrodeRole::Positive, self.nodes, self.positive_capacity_mah)?,
            self.negative
                .sample(ElectrodeRole::Negative, self.nodes, self.negative_capacity_mah)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictly_decreasing() {
        for c in [AnalyticCurve::positive(), AnalyticCurve::negative()] {
            for i in 0..=2000 {
                assert!(c.derivative(i as f64 / 2000.0) < 0.0);
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let c = AnalyticCurve::negative();
        let h = 1e-6;
        for i in 1..100 {
            let s = i as f64 / 100.0;
            let fd = (c.eval(s + h) - c.eval(s - h)) / (2.0 * h);
            assert!((fd - c.derivative(s)).abs() < 1e-5);
        }
    }

    #[test]
    fn family_builds() {
        let (p, n) = AnalyticFamily::default().build().unwrap();
        assert_eq!(p.stoich_grid().len(), 1001);
        assert!(p.potential_range().1 > 4.3);
        assert!(n.potential_range().0 > 0.0);
    }
}
