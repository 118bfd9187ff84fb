//! Synthetic ground truth: full-cell curves from known parameters, aged
//! parameter sets, and a brute-force grid search over the fit objective.

mod analytic;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CapacityVoltageSeries, CurrentDirection, CurveError, ReferencePotentialCurve, SeriesMeta};
use crate::features::q_li;
use crate::fitting::{FitBounds, FitConfig, FitError, FitProblem};
use crate::model::{voltage_at, ElectrodeParams, ModelError};

pub use analytic::{AnalyticCurve, AnalyticFamily, Step};

const BISECTION_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("voltage {target} V is not reachable (model spans {lo} to {hi} V)")]
    WindowUnreachable { target: f64, lo: f64, hi: f64 },
    #[error("no stoichiometry pair satisfies the degraded lithium inventory at the lower voltage limit")]
    InfeasibleDegradation,
    #[error("no feasible point on the oracle grid")]
    NoFeasibleGridPoint,
    #[error("invalid synthesis parameters: {0}")]
    InvalidSpec(String),
}

/// Where the generator's reference curves come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    Analytic(AnalyticFamily),
    FromReference,
}

impl Default for CurveFamily {
    fn default() -> Self {
        Self::Analytic(AnalyticFamily::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub theta_true: ElectrodeParams,
    #[serde(default)]
    pub family: CurveFamily,
    #[serde(default)]
    pub noise_sigma_v: f64,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: u64,
    /// `(v_min, v_max)`. When set, `q = 0` is moved to `V = v_min` and
    /// `Q_full` solved from `V(Q_full) = v_max`; otherwise `theta_true` is
    /// used as given.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

fn default_sample_count() -> usize {
    500
}

impl SynthSpec {
    pub fn new(theta_true: ElectrodeParams) -> Self {
        Self {
            theta_true,
            family: CurveFamily::default(),
            noise_sigma_v: 0.0,
            sample_count: default_sample_count(),
            seed: 0,
            window: None,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.noise_sigma_v >= 0.0) || !self.noise_sigma_v.is_finite() {
            return Err(SynthError::InvalidSpec(format!("noise_sigma_v {}", self.noise_sigma_v)));
        }
        if self.sample_count < 64 {
            return Err(SynthError::InvalidSpec(format!(
                "sample_count {} below 64",
                self.sample_count
            )));
        }
        if let Some((lo, hi)) = self.window {
            if !(lo < hi) {
                return Err(SynthError::InvalidSpec(format!("window ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Bisection for `V(q) = target` on `[lo, hi]`, where `V` increases in `q`.
fn solve_voltage(
    theta: &ElectrodeParams,
    target: f64,
    lo: f64,
    hi: f64,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<f64, SynthError> {
    let v = |q: f64| voltage_at(theta, q, u_pos, u_neg);
    let (v_lo, v_hi) = (v(lo)?, v(hi)?);
    if target < v_lo || target > v_hi {
        return Err(SynthError::WindowUnreachable {
            target,
            lo: v_lo,
            hi: v_hi,
        });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECTION_ITERATIONS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if v(m)? < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Moves `q = 0` to `V = v_min` and sets `Q_full` from `V = v_max`.
pub fn anchor_to_window(
    theta: &ElectrodeParams,
    v_min: f64,
    v_max: f64,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<ElectrodeParams, SynthError> {
    let (lo, hi) = theta.q_domain();
    if !(lo < hi) {
        return Err(SynthError::InvalidSpec("empty stoichiometry domain".into()));
    }
    let q0 = solve_voltage(theta, v_min, lo, hi, u_pos, u_neg)?;
    let q1 = solve_voltage(theta, v_max, q0, hi, u_pos, u_neg)?;
    let s = theta.stoich_at(q0);
    Ok(ElectrodeParams {
        x0_tilde: s.x_tilde.clamp(0.0, 1.0),
        y0_tilde: s.y_tilde.clamp(0.0, 1.0),
        q_full: q1 - q0,
        ..*theta
    })
}

/// A synthetic full-cell curve and the parameters that generated it.
pub fn generate(
    spec: &SynthSpec,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Result<(CapacityVoltageSeries, ElectrodeParams), SynthError> {
    spec.validate()?;
    let theta = match spec.window {
        Some((v_min, v_max)) => anchor_to_window(&spec.theta_true, v_min, v_max, u_pos, u_neg)?,
        None => spec.theta_true,
    };
    theta.validate()?;
    let n = spec.sample_count;
    let last = n - 1;
    let q: Vec<f64> = (0..n)
        .map(|i| {
            if i == last {
                theta.q_full
            } else {
                theta.q_full * i as f64 / last as f64
            }
        })
        .collect();
    let mut v = Vec::with_capacity(n);
    for &qi in &q {
        v.push(voltage_at(&theta, qi, u_pos, u_neg)?);
    }
    if spec.noise_sigma_v > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for vi in v.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *vi += spec.noise_sigma_v * z;
        }
    }
    let meta = SeriesMeta {
        unit: theta.unit,
        ..SeriesMeta::new(CurrentDirection::Charge, 0.05)
    };
    let series = CapacityVoltageSeries::new(q, v, meta)?;
    series.validate()?;
    Ok((series, theta))
}

/// Fractional losses to inject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub lam_pe: f64,
    pub lam_ne: f64,
    pub lli: f64,
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [("lam_pe", self.lam_pe), ("lam_ne", self.lam_ne), ("lli", self.lli)] {
            if !(0.0..=0.9).contains(&v) {
                return Err(SynthError::InvalidSpec(format!("{name} = {v} outside [0, 0.9]")));
            }
        }
        Ok(())
    }
}

/// Applies `d` to `theta`.
///
/// Capacities shrink by the active-material losses and the lithium
/// inventory by `lli`. The new discharged-state stoichiometries satisfy
/// both `x0'·Qn' + y0'·Qp' = Q_Li'` and `V = v_min` at `q = 0`; the new
/// `Q_full` comes from `V(Q_full) = v_max`.
pub fn degrade(
    theta: &ElectrodeParams,
    d: &DegradationSpec,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
    v_min: f64,
    v_max: f64,
) -> Result<ElectrodeParams, SynthError> {
    d.validate()?;
    let qn = (1.0 - d.lam_ne) * theta.qn_tilde;
    let qp = (1.0 - d.lam_pe) * theta.qp_tilde;
    let li = (1.0 - d.lli) * q_li(theta).total;
    let y_of = |x: f64| (li - x * qn) / qp;

    // y0' in [0, 1] restricts x0'
    let x_lo = ((li - qp) / qn).max(0.0);
    let x_hi = (li / qn).min(1.0);
    if !(x_lo <= x_hi) {
        return Err(SynthError::InfeasibleDegradation);
    }
    let f = |x: f64| -> f64 {
        let y = y_of(x).clamp(0.0, 1.0);
        u_pos.potential_at(y).unwrap_or(f64::NAN) - u_neg.potential_at(x).unwrap_or(f64::NAN) - v_min
    };
    // f increases with x: y falls (U_pos rises) and U_neg falls
    let (mut a, mut b) = (x_lo, x_hi);
    if !(f(a) <= 0.0 && f(b) >= 0.0) {
        return Err(SynthError::InfeasibleDegradation);
    }
    for _ in 0..BISECTION_ITERATIONS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let x0 = 0.5 * (a + b);
    let mut aged = ElectrodeParams {
        qn_tilde: qn,
        qp_tilde: qp,
        x0_tilde: x0,
        y0_tilde: y_of(x0),
        ..*theta
    };
    let hi = aged.q_domain().1;
    aged.q_full = solve_voltage(&aged, v_max, 0.0, hi, u_pos, u_neg)?;
    Ok(aged)
}

/// Exhaustive search of the fit objective over an `n⁴` grid spanning
/// `bounds`, restricted to feasible points. Returns the best parameters and
/// their objective.
pub fn grid_oracle(
    measured: &CapacityVoltageSeries,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
    bounds: &FitBounds,
    n_per_axis: usize,
    lambda: f64,
) -> Result<(ElectrodeParams, f64), SynthError> {
    let cfg = FitConfig {
        lambda,
        bounds: Some(*bounds),
        ..FitConfig::default()
    };
    let problem = FitProblem::new(measured, u_pos, u_neg, &cfg)?;
    grid_oracle_problem(&problem, bounds, n_per_axis)
}

/// [`grid_oracle`] on an already prepared problem, so the objective is the
/// one the fitter minimised.
pub fn grid_oracle_problem(
    problem: &FitProblem<'_>,
    bounds: &FitBounds,
    n_per_axis: usize,
) -> Result<(ElectrodeParams, f64), SynthError> {
    if n_per_axis < 5 {
        return Err(SynthError::InvalidSpec(format!("n_per_axis {n_per_axis} below 5")));
    }
    bounds.validate()?;
    let b = bounds.as_array();
    let axis = |k: usize| -> Vec<f64> {
        let (lo, hi) = b[k];
        (0..n_per_axis)
            .map(|i| {
                if i == n_per_axis - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n_per_axis - 1) as f64
                }
            })
            .collect()
    };
    let axes = [axis(0), axis(1), axis(2), axis(3)];
    let mut best: Option<([f64; 4], f64)> = None;
    for &qn in &axes[0] {
        for &qp in &axes[1] {
            for &x0 in &axes[2] {
                for &y0 in &axes[3] {
                    let p = [qn, qp, x0, y0];
                    if !problem.theta(p).is_feasible() {
                        continue;
                    }
                    let obj = problem.objective(p);
                    if best.map_or(true, |(_, o)| obj < o) {
                        best = Some((p, obj));
                    }
                }
            }
        }
    }
    let (p, obj) = best.ok_or(SynthError::NoFeasibleGridPoint)?;
    Ok((problem.theta(p), obj))
}
