//! Fits `{Qn, Qp, x0, y0}` to a measured full-cell curve by minimising
//!
//! ```text
//! λ·Σ E(q)² + (1 - λ)·Σ (dE/dq)²,    E(q) = V_model(q) - V_meas(q)
//! ```
//!
//! over a uniform resampling of the measured curve. Each multi-start runs a
//! box-constrained Levenberg-Marquardt; stoichiometry excursions outside
//! `[0, 1]` are handled by a quadratic penalty rather than by clamping.

mod lm;
mod problem;
mod starts;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CapacityVoltageSeries, CurveError, ReferencePotentialCurve, SmoothingConfig};
use crate::model::ElectrodeParams;

pub use problem::{residuals, FitProblem, Residuals, PENALTY_TERMS, PENALTY_WEIGHT};
pub use starts::latin_hypercube_starts;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
}

/// Per-parameter `(lo, hi)` search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub qn_tilde: (f64, f64),
    pub qp_tilde: (f64, f64),
    pub x0_tilde: (f64, f64),
    pub y0_tilde: (f64, f64),
}

impl FitBounds {
    /// `Qn, Qp ∈ [Q_full, 5·Q_full]`, `x0 ∈ [0, 0.3]`, `y0 ∈ [0.7, 1]`.
    pub fn default_for(q_full: f64) -> Self {
        Self {
            qn_tilde: (q_full, 5.0 * q_full),
            qp_tilde: (q_full, 5.0 * q_full),
            x0_tilde: (0.0, 0.3),
            y0_tilde: (0.7, 1.0),
        }
    }

    pub fn as_array(&self) -> [(f64, f64); 4] {
        [self.qn_tilde, self.qp_tilde, self.x0_tilde, self.y0_tilde]
    }

    pub fn from_array(b: [(f64, f64); 4]) -> Self {
        Self {
            qn_tilde: b[0],
            qp_tilde: b[1],
            x0_tilde: b[2],
            y0_tilde: b[3],
        }
    }

    pub fn contains(&self, p: [f64; 4]) -> bool {
        self.as_array()
            .iter()
            .zip(p)
            .all(|(&(lo, hi), v)| v >= lo && v <= hi)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        const NAMES: [&str; 4] = ["qn_tilde", "qp_tilde", "x0_tilde", "y0_tilde"];
        for (name, (lo, hi)) in NAMES.iter().zip(self.as_array()) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(FitError::InvalidConfig(format!("bounds for {name}: ({lo}, {hi})")));
            }
        }
        if self.qn_tilde.0 <= 0.0 || self.qp_tilde.0 <= 0.0 {
            return Err(FitError::InvalidConfig("capacity bounds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weight of the voltage channel; `1 - lambda` weights dV/dq.
    pub lambda: f64,
    pub resample_points: usize,
    /// `None` selects [`FitBounds::default_for`] the measured `Q_full`.
    pub bounds: Option<FitBounds>,
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tol_step: f64,
    pub tol_objective: f64,
    pub smoothing: SmoothingConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            resample_points: 500,
            bounds: None,
            starts: 16,
            seed: 0,
            max_iterations: 200,
            tol_step: 1e-10,
            tol_objective: 1e-12,
            smoothing: SmoothingConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |msg: String| Err(FitError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if self.resample_points < 16 {
            return bad(format!("resample_points {} below 16", self.resample_points));
        }
        if self.starts == 0 {
            return bad("starts must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if !(self.tol_step > 0.0) || !(self.tol_objective > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        self.smoothing.validate()?;
        Ok(())
    }

    pub fn bounds_for(&self, q_full: f64) -> FitBounds {
        self.bounds.unwrap_or_else(|| FitBounds::default_for(q_full))
    }
}

/// One multi-start run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub initial: ElectrodeParams,
    pub initial_objective: f64,
    pub final_theta: ElectrodeParams,
    pub final_objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: ElectrodeParams,
    pub rmse_voltage: f64,
    pub rmse_dvdq: f64,
    pub objective: f64,
    /// Tolerances met and `theta` strictly feasible.
    pub converged: bool,
    pub iterations: usize,
    pub start_records: Vec<StartRecord>,
    pub residual_series: Residuals,
}

/// Multi-start fit of `measured` against the two reference curves.
///
/// Errors only for invalid configuration or a series that fails
/// validation; a fit that fails to converge is reported through
/// `converged = false`.
pub fn fit(
    measured: &CapacityVoltageSeries,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
    cfg: &FitConfig,
) -> Result<FitResult, FitError> {
    let problem = FitProblem::new(measured, u_pos, u_neg, cfg)?;
    Ok(fit_problem(&problem, cfg))
}

/// Fits an already prepared problem.
pub fn fit_problem(problem: &FitProblem<'_>, cfg: &FitConfig) -> FitResult {
    let bounds = cfg.bounds_for(problem.q_full());
    let box_ = bounds.as_array();
    let settings = lm::LmSettings {
        max_iterations: cfg.max_iterations,
        tol_step: cfg.tol_step,
        tol_objective: cfg.tol_objective,
    };

    let mut records = Vec::with_capacity(cfg.starts);
    let mut best: Option<(lm::LmOutcome, Residuals)> = None;
    for start in latin_hypercube_starts(&bounds, problem.q_full(), cfg.starts, cfg.seed) {
        let outcome = lm::minimize(problem, start, &box_, settings);
        records.push(StartRecord {
            initial: problem.theta(start),
            initial_objective: problem.objective(start),
            final_theta: problem.theta(outcome.params),
            final_objective: outcome.objective,
            iterations: outcome.iterations,
        });
        let res = problem.residuals(outcome.params);
        let better = match &best {
            None => true,
            Some((b, bres)) => rank(&outcome, &res, b, bres) == Ordering::Less,
        };
        if better {
            best = Some((outcome, res));
        }
    }

    // cfg.starts >= 1 is enforced by validation
    let (outcome, res) = best.expect("at least one start");
    let theta = problem.theta(outcome.params);
    FitResult {
        converged: outcome.tolerances_met && outcome.objective.is_finite() && theta.is_strictly_feasible(),
        rmse_voltage: res.rmse_voltage(),
        rmse_dvdq: res.rmse_dvdq(),
        objective: outcome.objective,
        iterations: outcome.iterations,
        theta,
        start_records: records,
        residual_series: res,
    }
}

/// Lowest objective, then lowest voltage RMSE, then lexicographic θ.
fn rank(a: &lm::LmOutcome, ares: &Residuals, b: &lm::LmOutcome, bres: &Residuals) -> Ordering {
    let key = |o: &lm::LmOutcome| if o.objective.is_finite() { o.objective } else { f64::INFINITY };
    key(a)
        .total_cmp(&key(b))
        .then_with(|| ares.rmse_voltage().total_cmp(&bres.rmse_voltage()))
        .then_with(|| {
            a.params
                .iter()
                .zip(&b.params)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
}

/// Independent fits in input order. A failing series yields an `Err` in its
/// slot without affecting the others.
pub fn fit_batch(
    measured: &[CapacityVoltageSeries],
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
    cfg: &FitConfig,
) -> Vec<Result<FitResult, FitError>> {
    measured.iter().map(|m| fit(m, u_pos, u_neg, cfg)).collect()
}
