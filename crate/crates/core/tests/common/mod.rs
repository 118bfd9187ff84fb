#![allow(dead_code)]

use dvakit_core::synth::AnalyticFamily;
use dvakit_core::{
    CapacityVoltageSeries, CurrentDirection, ElectrodeParams, ElectrodeRole, ReferenceMeta,
    ReferencePotentialCurve, SeriesMeta, SweepDirection,
};
use rand::Rng;

pub fn analytic_curves() -> (ReferencePotentialCurve, ReferencePotentialCurve) {
    AnalyticFamily::default().build().unwrap()
}

pub fn curve_from_fn(role: ElectrodeRole, nodes: usize, f: impl Fn(f64) -> f64) -> ReferencePotentialCurve {
    let last = nodes - 1;
    let s: Vec<f64> = (0..nodes).map(|i| i as f64 / last as f64).collect();
    let u: Vec<f64> = s.iter().map(|&x| f(x)).collect();
    let meta = ReferenceMeta {
        role,
        direction: SweepDirection::Lithiation,
        c_rate: 0.05,
        window: (u[last] - 0.01, u[0] + 0.01),
    };
    ReferencePotentialCurve::from_stoichiometry(s, u, meta, 3.0).unwrap()
}

pub fn series(q: Vec<f64>, v: Vec<f64>) -> CapacityVoltageSeries {
    CapacityVoltageSeries::new(q, v, SeriesMeta::new(CurrentDirection::Charge, 0.05)).unwrap()
}

pub fn uniform_series(n: usize, q_max: f64, f: impl Fn(f64) -> f64) -> CapacityVoltageSeries {
    let q: Vec<f64> = (0..n).map(|i| q_max * i as f64 / (n - 1) as f64).collect();
    let v = q.iter().map(|&x| f(x)).collect();
    series(q, v)
}

/// A feasible parameter set inside the default fit bounds whose windows
/// stay clear of the stoichiometry limits.
pub fn random_theta(rng: &mut impl Rng) -> ElectrodeParams {
    let qf: f64 = rng.random_range(1.5..3.0);
    let x0: f64 = rng.random_range(0.01..0.1);
    let y0: f64 = rng.random_range(0.85..0.98);
    let x100: f64 = rng.random_range(0.8..0.95);
    let y100: f64 = rng.random_range(0.05..0.2);
    ElectrodeParams::new(qf / (x100 - x0), qf / (y0 - y100), x0, y0, qf)
}
