mod common;

use common::analytic_curves;
use dvakit_core::features::{degradation, q_li};
use dvakit_core::fitting::{fit, FitBounds, FitConfig, FitProblem};
use dvakit_core::model::voltage_at;
use dvakit_core::synth::{
    anchor_to_window, degrade, generate, grid_oracle, grid_oracle_problem, DegradationSpec,
    SynthError, SynthSpec,
};
use dvakit_core::ElectrodeParams;

#[test]
fn same_seed_same_series() {
    let (up, un) = analytic_curves();
    let spec = SynthSpec {
        noise_sigma_v: 0.001,
        seed: 12,
        ..SynthSpec::new(ElectrodeParams::new(2.8, 2.7, 0.03, 0.95, 2.3))
    };
    let a = generate(&spec, &up, &un).unwrap();
    let b = generate(&spec, &up, &un).unwrap();
    assert_eq!(a, b);
    let c = generate(&SynthSpec { seed: 13, ..spec }, &up, &un).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn window_anchored_generation() {
    let (up, un) = analytic_curves();
    let raw = ElectrodeParams::new(2.6, 2.7, 0.05, 0.97, 1.0);
    let spec = SynthSpec {
        window: Some((3.0, 4.2)),
        ..SynthSpec::new(raw)
    };
    let (s, t) = generate(&spec, &up, &un).unwrap();
    assert!((s.v()[0] - 3.0).abs() < 1e-8);
    assert!((s.v()[s.len() - 1] - 4.2).abs() < 1e-8);
    assert_eq!(s.q_full(), t.q_full);
}

#[test]
fn negative_limited_window_gives_closed_form_capacity() {
    let (up, un) = analytic_curves();
    // positive has room to spare, so the top of charge is x = 1
    let t = ElectrodeParams::new(2.4, 4.0, 0.05, 0.97, 1.0);
    let v_min = voltage_at(&t, 0.0, &up, &un).unwrap();
    let q_top = t.qn_tilde * (1.0 - t.x0_tilde);
    let v_max = voltage_at(&t, q_top, &up, &un).unwrap();
    let a = anchor_to_window(&t, v_min, v_max, &up, &un).unwrap();
    assert!((a.q_full - q_top).abs() < 1e-9, "{} vs {}", a.q_full, q_top);
}

#[test]
fn unreachable_window_is_an_error() {
    let (up, un) = analytic_curves();
    let spec = SynthSpec {
        window: Some((3.0, 6.0)),
        ..SynthSpec::new(ElectrodeParams::new(2.6, 2.7, 0.05, 0.97, 1.0))
    };
    assert!(matches!(
        generate(&spec, &up, &un),
        Err(SynthError::WindowUnreachable { .. })
    ));
}

#[test]
fn degradation_preserves_accounting_and_anchor() {
    let (up, un) = analytic_curves();
    let t = anchor_to_window(&ElectrodeParams::new(2.6, 2.7, 0.05, 0.97, 1.0), 3.0, 4.2, &up, &un).unwrap();
    let li = q_li(&t).total;
    for d in [
        DegradationSpec { lam_pe: 0.03, lam_ne: 0.08, lli: 0.15 },
        DegradationSpec { lam_pe: 0.1, lam_ne: 0.0, lli: 0.05 },
        DegradationSpec { lam_pe: 0.0, lam_ne: 0.2, lli: 0.2 },
    ] {
        let a = degrade(&t, &d, &up, &un, 3.0, 4.2).unwrap();
        let li_aged = a.x0_tilde * a.qn_tilde + a.y0_tilde * a.qp_tilde;
        assert!((li_aged - (1.0 - d.lli) * li).abs() < 1e-9);
        assert!((voltage_at(&a, 0.0, &up, &un).unwrap() - 3.0).abs() < 1e-8);
        assert!((voltage_at(&a, a.q_full, &up, &un).unwrap() - 4.2).abs() < 1e-8);
        let m = degradation(&t, &a).unwrap();
        assert!((m.lam_pe - d.lam_pe).abs() < 1e-12);
        assert!((m.lam_ne - d.lam_ne).abs() < 1e-12);
        assert!((m.lli - d.lli).abs() < 1e-9);
    }
    let bad = DegradationSpec { lam_pe: 0.95, lam_ne: 0.0, lli: 0.0 };
    assert!(degrade(&t, &bad, &up, &un, 3.0, 4.2).is_err());
}

#[test]
fn degradation_round_trip_through_fitting() {
    let (up, un) = analytic_curves();
    let d = DegradationSpec { lam_pe: 0.03, lam_ne: 0.08, lli: 0.15 };
    let pristine_spec = SynthSpec {
        window: Some((3.0, 4.2)),
        ..SynthSpec::new(ElectrodeParams::new(2.6, 2.7, 0.05, 0.97, 1.0))
    };
    let (ps, pt) = generate(&pristine_spec, &up, &un).unwrap();
    let aged = degrade(&pt, &d, &up, &un, 3.0, 4.2).unwrap();
    let (as_, _) = generate(&SynthSpec::new(aged), &up, &un).unwrap();
    let cfg = FitConfig::default();
    let fp = fit(&ps, &up, &un, &cfg).unwrap();
    let fa = fit(&as_, &up, &un, &cfg).unwrap();
    let m = degradation(&fp.theta, &fa.theta).unwrap();
    assert!((m.lam_pe - d.lam_pe).abs() < 0.01, "{m:?}");
    assert!((m.lam_ne - d.lam_ne).abs() < 0.01, "{m:?}");
    assert!((m.lli - d.lli).abs() < 0.01, "{m:?}");
}

#[test]
fn oracle_finds_truth_on_grid() {
    let (up, un) = analytic_curves();
    let truth = ElectrodeParams::new(2.75, 2.7, 0.05, 0.95, 2.3);
    let (s, _) = generate(&SynthSpec::new(truth), &up, &un).unwrap();
    // five points per axis with the truth at the centre node
    let b = FitBounds {
        qn_tilde: (2.55, 2.95),
        qp_tilde: (2.5, 2.9),
        x0_tilde: (0.03, 0.07),
        y0_tilde: (0.93, 0.97),
    };
    let cfg = FitConfig {
        smoothing: dvakit_core::SmoothingConfig::disabled(),
        resample_points: s.len(),
        lambda: 1.0,
        ..FitConfig::default()
    };
    let problem = FitProblem::new(&s, &up, &un, &cfg).unwrap();
    let (best, obj) = grid_oracle_problem(&problem, &b, 5).unwrap();
    assert!(obj < 1e-20, "{obj}");
    assert!((best.qn_tilde - 2.75).abs() < 1e-12);
    assert!((best.qp_tilde - 2.7).abs() < 1e-12);
    assert!((best.x0_tilde - 0.05).abs() < 1e-12);
    assert!((best.y0_tilde - 0.95).abs() < 1e-12);
}

#[test]
fn refining_grid_never_worsens_oracle() {
    let (up, un) = analytic_curves();
    let truth = ElectrodeParams::new(2.75, 2.7, 0.05, 0.95, 2.3);
    let (s, _) = generate(&SynthSpec::new(truth), &up, &un).unwrap();
    let b = FitBounds {
        qn_tilde: (2.45, 3.05),
        qp_tilde: (2.4, 3.0),
        x0_tilde: (0.0, 0.1),
        y0_tilde: (0.9, 1.0),
    };
    // 2^k + 1 points per axis: each grid contains the previous one
    let mut last = f64::INFINITY;
    for n in [5, 9, 17] {
        let (_, obj) = grid_oracle(&s, &up, &un, &b, n, 0.5).unwrap();
        assert!(obj <= last, "{obj} > {last}");
        last = obj;
    }
}

#[test]
fn shrinking_bounds_never_worsens_oracle() {
    let (up, un) = analytic_curves();
    let truth = ElectrodeParams::new(2.75, 2.7, 0.05, 0.95, 2.3);
    let (s, _) = generate(&SynthSpec::new(truth), &up, &un).unwrap();
    let mut centre = [2.75, 2.7, 0.05, 0.95];
    let mut last = f64::INFINITY;
    for half in [0.4, 0.2, 0.1, 0.05, 0.025] {
        // the previous best stays a node of the shrunken grid
        let h = [half, half, half / 10.0, half / 10.0];
        let b = FitBounds::from_array(core::array::from_fn(|k| (centre[k] - h[k], centre[k] + h[k])));
        let (best, obj) = grid_oracle(&s, &up, &un, &b, 5, 0.5).unwrap();
        // node placement rounds the centre by an ulp or so
        assert!(obj <= last * (1.0 + 1e-12), "{obj} > {last}");
        last = obj;
        centre = [best.qn_tilde, best.qp_tilde, best.x0_tilde, best.y0_tilde];
    }
}

#[test]
fn oracle_without_feasible_points() {
    let (up, un) = analytic_curves();
    let (s, _) = generate(&SynthSpec::new(ElectrodeParams::new(2.75, 2.7, 0.05, 0.95, 2.3)), &up, &un).unwrap();
    let b = FitBounds {
        qn_tilde: (1.0, 1.5),
        qp_tilde: (1.0, 1.5),
        x0_tilde: (0.0, 0.1),
        y0_tilde: (0.9, 1.0),
    };
    assert!(matches!(
        grid_oracle(&s, &up, &un, &b, 5, 0.5),
        Err(SynthError::NoFeasibleGridPoint)
    ));
}
