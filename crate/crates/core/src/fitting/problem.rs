use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FitConfig, FitError};
use crate::curves::{differentiate, resample, CapacityUnit, CapacityVoltageSeries, ReferencePotentialCurve};
use crate::model::ElectrodeParams;

/// Penalty residual per unit of stoichiometry excursion, before scaling by
/// `sqrt(N)`.
pub const PENALTY_WEIGHT: f64 = 10.0;

/// Number of penalty residuals appended after the data residuals:
/// `-x0`, `x100 - 1`, `-y100`, `y0 - 1` (each clipped at zero).
pub const PENALTY_TERMS: usize = 4;

/// Unweighted residual channels at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub q: Vec<f64>,
    /// `E(q) = V_model(q) - V_meas(q)`, volts.
    pub voltage: Vec<f64>,
    /// `dE/dq = dV_model/dq - dV_meas/dq`, volts per capacity unit.
    pub dvdq: Vec<f64>,
    /// Weighted stoichiometry excursions, all zero for a feasible point.
    pub penalty: [f64; PENALTY_TERMS],
    pub lambda: f64,
}

impl Residuals {
    /// `[sqrt(λ)·E, sqrt(1-λ)·dE/dq, penalty]`.
    pub fn stacked(&self) -> Vec<f64> {
        let sv = libm::sqrt(self.lambda);
        let sd = libm::sqrt(1.0 - self.lambda);
        self.voltage
            .iter()
            .map(|e| sv * e)
            .chain(self.dvdq.iter().map(|d| sd * d))
            .chain(self.penalty.iter().copied())
            .collect()
    }

    /// `λ·ΣE² + (1-λ)·Σ(dE/dq)² + Σpenalty²`.
    pub fn objective(&self) -> f64 {
        let ev: f64 = self.voltage.iter().map(|e| e * e).sum();
        let ed: f64 = self.dvdq.iter().map(|d| d * d).sum();
        let ep: f64 = self.penalty.iter().map(|p| p * p).sum();
        self.lambda * ev + (1.0 - self.lambda) * ed + ep
    }

    pub fn rmse_voltage(&self) -> f64 {
        rms(&self.voltage)
    }

    pub fn rmse_dvdq(&self) -> f64 {
        rms(&self.dvdq)
    }
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64)
}

/// A measured curve prepared for fitting: resampled onto a uniform grid over
/// `[0, Q_full]`, with its smoothed differential precomputed. The voltage
/// channel keeps the raw (resampled) voltage.
#[derive(Debug, Clone)]
pub struct FitProblem<'a> {
    u_pos: &'a ReferencePotentialCurve,
    u_neg: &'a ReferencePotentialCurve,
    q: Vec<f64>,
    v_meas: Vec<f64>,
    dvdq_meas: Vec<f64>,
    q_full: f64,
    lambda: f64,
    unit: CapacityUnit,
    penalty_weight: f64,
}

impl<'a> FitProblem<'a> {
    pub fn new(
        measured: &CapacityVoltageSeries,
        u_pos: &'a ReferencePotentialCurve,
        u_neg: &'a ReferencePotentialCurve,
        cfg: &FitConfig,
    ) -> Result<Self, FitError> {
        cfg.validate()?;
        measured.validate()?;
        let grid = resample(measured, cfg.resample_points)?;
        let dvdq_meas = differentiate(&grid, &cfg.smoothing)?;
        let n = grid.len();
        Ok(Self {
            u_pos,
            u_neg,
            q_full: grid.q_full(),
            q: grid.q().to_vec(),
            v_meas: grid.v().to_vec(),
            dvdq_meas,
            lambda: cfg.lambda,
            unit: measured.meta().unit,
            penalty_weight: PENALTY_WEIGHT * libm::sqrt(n as f64),
        })
    }

    pub fn q_full(&self) -> f64 {
        self.q_full
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grid(&self) -> &[f64] {
        &self.q
    }

    pub fn measured_voltage(&self) -> &[f64] {
        &self.v_meas
    }

    pub fn measured_dvdq(&self) -> &[f64] {
        &self.dvdq_meas
    }

    /// Total residual count including penalty terms.
    pub fn residual_len(&self) -> usize {
        2 * self.q.len() + PENALTY_TERMS
    }

    /// Full parameter set for a fitted vector `[Qn, Qp, x0, y0]`.
    pub fn theta(&self, p: [f64; 4]) -> ElectrodeParams {
        ElectrodeParams {
            unit: self.unit,
            ..ElectrodeParams::new(p[0], p[1], p[2], p[3], self.q_full)
        }
    }

    fn penalty(&self, p: &[f64; 4]) -> [f64; PENALTY_TERMS] {
        let w = self.penalty_weight;
        let x100 = p[2] + self.q_full / p[0];
        let y100 = p[3] - self.q_full / p[1];
        [
            w * (-p[2]).max(0.0),
            w * (x100 - 1.0).max(0.0),
            w * (-y100).max(0.0),
            w * (p[3] - 1.0).max(0.0),
        ]
    }

    /// Residual channels at `p`. Points whose stoichiometries fall outside
    /// `[0, 1]` use the linear continuation of the reference curves; the
    /// penalty terms carry the excursion itself.
    pub fn residuals(&self, p: [f64; 4]) -> Residuals {
        let (qn, qp, x0, y0) = (p[0], p[1], p[2], p[3]);
        let n = self.q.len();
        let mut voltage = Vec::with_capacity(n);
        let mut dvdq = Vec::with_capacity(n);
        for i in 0..n {
            let q = self.q[i];
            let (up, up1, _) = self.u_pos.eval_extended(y0 - q / qp);
            let (un, un1, _) = self.u_neg.eval_extended(x0 + q / qn);
            voltage.push(up - un - self.v_meas[i]);
            dvdq.push(-up1 / qp - un1 / qn - self.dvdq_meas[i]);
        }
        Residuals {
            q: self.q.clone(),
            voltage,
            dvdq,
            penalty: self.penalty(&p),
            lambda: self.lambda,
        }
    }

    /// Objective without allocating the residual vectors.
    pub fn objective(&self, p: [f64; 4]) -> f64 {
        let (qn, qp, x0, y0) = (p[0], p[1], p[2], p[3]);
        let mut ev = 0.0;
        let mut ed = 0.0;
        for i in 0..self.q.len() {
            let q = self.q[i];
            let (up, up1, _) = self.u_pos.eval_extended(y0 - q / qp);
            let (un, un1, _) = self.u_neg.eval_extended(x0 + q / qn);
            let e = up - un - self.v_meas[i];
            let d = -up1 / qp - un1 / qn - self.dvdq_meas[i];
            ev += e * e;
            ed += d * d;
        }
        let ep: f64 = self.penalty(&p).iter().map(|x| x * x).sum();
        self.lambda * ev + (1.0 - self.lambda) * ed + ep
    }

    /// Stacked residuals and their Jacobian (row-major, four columns).
    pub(crate) fn residuals_and_jacobian(&self, p: &[f64; 4], r: &mut Vec<f64>, jac: &mut Vec<f64>) {
        let (qn, qp, x0, y0) = (p[0], p[1], p[2], p[3]);
        let n = self.q.len();
        let m = self.residual_len();
        r.clear();
        r.resize(m, 0.0);
        jac.clear();
        jac.resize(m * 4, 0.0);
        let sv = libm::sqrt(self.lambda);
        let sd = libm::sqrt(1.0 - self.lambda);
        for i in 0..n {
            let q = self.q[i];
            let (up, up1, up2) = self.u_pos.eval_extended(y0 - q / qp);
            let (un, un1, un2) = self.u_neg.eval_extended(x0 + q / qn);
            r[i] = sv * (up - un - self.v_meas[i]);
            r[n + i] = sd * (-up1 / qp - un1 / qn - self.dvdq_meas[i]);

            let qn2 = qn * qn;
            let qp2 = qp * qp;
            let row = &mut jac[i * 4..i * 4 + 4];
            row[0] = sv * un1 * q / qn2;
            row[1] = sv * up1 * q / qp2;
            row[2] = -sv * un1;
            row[3] = sv * up1;
            let row = &mut jac[(n + i) * 4..(n + i) * 4 + 4];
            row[0] = sd * (un2 * q / (qn2 * qn) + un1 / qn2);
            row[1] = sd * (-up2 * q / (qp2 * qp) + up1 / qp2);
            row[2] = -sd * un2 / qn;
            row[3] = -sd * up2 / qp;
        }

        let w = self.penalty_weight;
        let pen = self.penalty(p);
        let base = 2 * n;
        r[base..base + PENALTY_TERMS].copy_from_slice(&pen);
        if pen[0] > 0.0 {
            jac[base * 4 + 2] = -w;
        }
        if pen[1] > 0.0 {
            jac[(base + 1) * 4] = -w * self.q_full / (qn * qn);
            jac[(base + 1) * 4 + 2] = w;
        }
        if pen[2] > 0.0 {
            jac[(base + 2) * 4 + 1] = -w * self.q_full / (qp * qp);
            jac[(base + 2) * 4 + 3] = -w;
        }
        if pen[3] > 0.0 {
            jac[(base + 3) * 4 + 3] = w;
        }
    }
}

/// Convenience wrapper: prepares `measured` and evaluates the residual
/// channels at `theta`. `theta.q_full` is ignored in favour of the measured
/// full-cell capacity.
pub fn residuals(
    theta: &ElectrodeParams,
    measured: &CapacityVoltageSeries,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
    cfg: &FitConfig,
) -> Result<Residuals, FitError> {
    let problem = FitProblem::new(measured, u_pos, u_neg, cfg)?;
    Ok(problem.residuals(theta.fitted()))
}
