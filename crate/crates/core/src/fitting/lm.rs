//! Box-constrained Levenberg-Marquardt for the four-parameter fit.
//!
//! Steps are solved on the free coordinates only (a coordinate sitting on a
//! bound with the gradient pushing outward is frozen for that iteration),
//! then projected back into the box. Damping follows Nielsen's update with
//! Marquardt diagonal scaling, which makes the iteration invariant to the
//! very different magnitudes of capacities and stoichiometries.

use alloc::vec::Vec;

use super::problem::FitProblem;
use crate::linalg::cholesky_solve;

/// Objective below which the fit is treated as exact.
const OBJECTIVE_FLOOR: f64 = 1e-26;
const MAX_DAMPING: f64 = 1e20;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub max_iterations: usize,
    pub tol_step: f64,
    pub tol_objective: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOutcome {
    pub params: [f64; 4],
    pub objective: f64,
    pub iterations: usize,
    /// Step and objective-change tolerances were met (or the objective hit
    /// the exact-fit floor).
    pub tolerances_met: bool,
}

pub(crate) fn minimize(
    problem: &FitProblem<'_>,
    start: [f64; 4],
    bounds: &[(f64, f64); 4],
    settings: LmSettings,
) -> LmOutcome {
    let mut p = start;
    for k in 0..4 {
        p[k] = p[k].clamp(bounds[k].0, bounds[k].1);
    }
    let mut r = Vec::new();
    let mut jac = Vec::new();
    problem.residuals_and_jacobian(&p, &mut r, &mut jac);
    let mut cost = sum_squares(&r);
    if !cost.is_finite() {
        return LmOutcome {
            params: p,
            objective: cost,
            iterations: 0,
            tolerances_met: false,
        };
    }

    let mut r_trial = Vec::new();
    let mut jac_trial = Vec::new();
    let (mut a, mut g) = normal_equations(&r, &jac);
    let mut scale = [0.0f64; 4];
    for k in 0..4 {
        scale[k] = a[k * 4 + k].max(f64::MIN_POSITIVE);
    }
    let mut mu = 1e-3;
    let mut nu = 2.0;

    for iteration in 1..=settings.max_iterations {
        if cost < OBJECTIVE_FLOOR {
            return LmOutcome {
                params: p,
                objective: cost,
                iterations: iteration - 1,
                tolerances_met: true,
            };
        }
        for k in 0..4 {
            scale[k] = scale[k].max(a[k * 4 + k]);
        }
        let free: Vec<usize> = (0..4)
            .filter(|&k| {
                let at_lo = p[k] <= bounds[k].0 && g[k] > 0.0;
                let at_hi = p[k] >= bounds[k].1 && g[k] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        if free.is_empty() {
            return LmOutcome {
                params: p,
                objective: cost,
                iterations: iteration - 1,
                tolerances_met: true,
            };
        }

        loop {
            let nf = free.len();
            let mut sys = alloc::vec![0.0; nf * nf];
            let mut rhs = alloc::vec![0.0; nf];
            for (i, &ki) in free.iter().enumerate() {
                for (j, &kj) in free.iter().enumerate() {
                    sys[i * nf + j] = a[ki * 4 + kj];
                }
                sys[i * nf + i] += mu * scale[ki];
                rhs[i] = -g[ki];
            }
            let step_free = cholesky_solve(&sys, &rhs, nf);
            let mut trial = p;
            if let Some(delta) = &step_free {
                for (i, &k) in free.iter().enumerate() {
                    trial[k] = (p[k] + delta[i]).clamp(bounds[k].0, bounds[k].1);
                }
            }
            let mut step = [0.0; 4];
            for k in 0..4 {
                step[k] = trial[k] - p[k];
            }

            let accepted = if step_free.is_some() && step.iter().any(|s| *s != 0.0) {
                problem.residuals_and_jacobian(&trial, &mut r_trial, &mut jac_trial);
                let cost_trial = sum_squares(&r_trial);
                // predicted decrease of the linear model for the projected step
                let mut gs = 0.0;
                let mut sas = 0.0;
                for i in 0..4 {
                    gs += g[i] * step[i];
                    for j in 0..4 {
                        sas += step[i] * a[i * 4 + j] * step[j];
                    }
                }
                let predicted = -(2.0 * gs + sas);
                let actual = cost - cost_trial;
                if cost_trial.is_finite() && actual > 0.0 && predicted > 0.0 {
                    let rho = actual / predicted;
                    if rho > 1e-4 {
                        let t = 2.0 * rho - 1.0;
                        mu *= (1.0f64 / 3.0).max(1.0 - t * t * t);
                        nu = 2.0;
                        Some(cost_trial)
                    } else {
                        None
                    }
                } else {
                    None
                }
            } else {
                None
            };

            match accepted {
                Some(cost_trial) => {
                    let rel_step = (0..4)
                        .map(|k| step[k].abs() / p[k].abs().max(1e-3))
                        .fold(0.0, f64::max);
                    let rel_decrease = (cost - cost_trial) / cost;
                    p = trial;
                    core::mem::swap(&mut r, &mut r_trial);
                    core::mem::swap(&mut jac, &mut jac_trial);
                    cost = cost_trial;
                    let ne = normal_equations(&r, &jac);
                    a = ne.0;
                    g = ne.1;
                    let done = (rel_step < settings.tol_step && rel_decrease < settings.tol_objective)
                        || cost < OBJECTIVE_FLOOR;
                    if done {
                        return LmOutcome {
                            params: p,
                            objective: cost,
                            iterations: iteration,
                            tolerances_met: true,
                        };
                    }
                    break;
                }
                None => {
                    mu *= nu;
                    nu *= 2.0;
                    if mu > MAX_DAMPING {
                        // No step of any length improves the objective: the
                        // iterate is stationary to working precision.
                        return LmOutcome {
                            params: p,
                            objective: cost,
                            iterations: iteration,
                            tolerances_met: true,
                        };
                    }
                }
            }
        }
    }

    LmOutcome {
        params: p,
        objective: cost,
        iterations: settings.max_iterations,
        tolerances_met: false,
    }
}

fn sum_squares(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// `(JᵀJ, Jᵀr)` for a four-column Jacobian.
fn normal_equations(r: &[f64], jac: &[f64]) -> ([f64; 16], [f64; 4]) {
    let mut a = [0.0; 16];
    let mut g = [0.0; 4];
    for (i, ri) in r.iter().enumerate() {
        let row = &jac[i * 4..i * 4 + 4];
        for j in 0..4 {
            g[j] += row[j] * ri;
            for k in j..4 {
                a[j * 4 + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..4 {
        for k in 0..j {
            a[j * 4 + k] = a[k * 4 + j];
        }
    }
    (a, g)
}
