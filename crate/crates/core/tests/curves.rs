mod common;

use common::{curve_from_fn, series, uniform_series};
use dvakit_core::curves::{
    build_reference_curve, capacity_at_rate_check, differentiate, resample, smooth,
};
use dvakit_core::{ElectrodeRole, ReferenceMeta, SmoothingConfig, SweepDirection};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn pos_meta() -> ReferenceMeta {
    ReferenceMeta {
        role: ElectrodeRole::Positive,
        direction: SweepDirection::Lithiation,
        c_rate: 0.05,
        window: (3.0, 4.4),
    }
}

#[test]
fn linear_curve_is_reproduced() {
    let c = curve_from_fn(ElectrodeRole::Positive, 21, |s| 4.2 - s);
    assert!((c.potential_at(0.375).unwrap() - 3.825).abs() < 1e-9);
}

#[test]
fn decreasing_cubic_within_micro_volt() {
    let f = |s: f64| 4.2 - 0.5 * s - 0.3 * s * s * s;
    let c = curve_from_fn(ElectrodeRole::Positive, 101, f);
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let worst = (0..1000)
        .map(|_| {
            let s: f64 = rng.random();
            (c.potential_at(s).unwrap() - f(s)).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "max error {worst}");
}

#[test]
fn ingestion_is_order_insensitive_and_idempotent() {
    let cap: Vec<f64> = (0..60).map(|i| i as f64 * 0.05).collect();
    let pot: Vec<f64> = cap.iter().map(|c| 0.9 * (-c).exp() + 0.08 - 0.01 * c).collect();
    let meta = ReferenceMeta {
        role: ElectrodeRole::Negative,
        direction: SweepDirection::Delithiation,
        c_rate: 0.05,
        window: (0.0, 1.0),
    };
    let a = build_reference_curve(&cap, &pot, meta).unwrap();
    let rc: Vec<f64> = cap.iter().rev().copied().collect();
    let rp: Vec<f64> = pot.iter().rev().copied().collect();
    let b = build_reference_curve(&rc, &rp, meta).unwrap();
    assert_eq!(a, b);

    let again = build_reference_curve(&a.capacity_grid(), a.potential(), meta).unwrap();
    assert_eq!(a.stoich_grid(), again.stoich_grid());
    assert_eq!(a.potential(), again.potential());
}

#[test]
fn retrograde_rows_are_named() {
    let mut cap: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let pot: Vec<f64> = (0..20).map(|i| 4.3 - 0.05 * i as f64).collect();
    cap.swap(3, 4);
    cap.swap(10, 11);
    let err = build_reference_curve(&cap, &pot, pos_meta()).unwrap_err();
    assert!(err.to_string().contains("rows"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_interpolant_is_monotone_and_bounded(
        steps in prop::collection::vec(0.0f64..0.2, 4..40),
        flats in prop::collection::vec(any::<bool>(), 40),
    ) {
        // non-increasing node values with random plateaus
        let mut u = vec![4.3];
        for (i, d) in steps.iter().enumerate() {
            let d = if flats[i] { 0.0 } else { *d };
            u.push(u[i] - d);
        }
        let n = u.len();
        let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let meta = ReferenceMeta { window: (u[n - 1] - 0.01, 4.31), ..pos_meta() };
        let c = dvakit_core::ReferencePotentialCurve::from_stoichiometry(s.clone(), u.clone(), meta, 1.0).unwrap();
        let (lo, hi) = (u[n - 1], u[0]);
        let mut prev = f64::INFINITY;
        for k in 0..=10_000 {
            let v = c.potential_at(k as f64 / 10_000.0).unwrap();
            prop_assert!(v <= prev);
            prop_assert!(v >= lo && v <= hi);
            prev = v;
        }
        for (si, ui) in s.iter().zip(&u) {
            prop_assert_eq!(c.potential_at(*si).unwrap(), *ui);
        }
    }

    #[test]
    fn savgol_reproduces_cubics(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0,
    ) {
        let f = |q: f64| a + b * q + c * q * q + d * q * q * q;
        let s = uniform_series(200, 2.0, f);
        let out = smooth(&s, &SmoothingConfig::default()).unwrap();
        for (q, v) in out.q().iter().zip(out.v()) {
            prop_assert!((v - f(*q)).abs() <= 1e-12);
        }
    }
}

#[test]
fn quadratic_is_unchanged_by_smoothing() {
    let f = |q: f64| 3.4 + 0.2 * q - 0.05 * q * q;
    let s = uniform_series(300, 2.5, f);
    let out = smooth(&s, &SmoothingConfig::default()).unwrap();
    for (a, b) in out.v().iter().zip(s.v()) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(smooth(&s, &SmoothingConfig::disabled()).unwrap(), s);
}

#[test]
fn smoothing_reduces_noise() {
    let clean = |q: f64| 3.5 + 0.3 * q - 0.1 * q * q;
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let base = uniform_series(400, 2.0, clean);
    let noisy = base
        .with_voltage(base.v().iter().map(|v| v + 1e-3 * normal(&mut rng)).collect())
        .unwrap();
    let cfg = SmoothingConfig {
        window_length: 11,
        poly_order: 3,
        enabled: true,
    };
    let out = smooth(&noisy, &cfg).unwrap();
    let rms = |v: &[f64]| {
        (noisy.q().iter().zip(v).map(|(q, x)| (x - clean(*q)).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    assert!(rms(out.v()) < rms(noisy.v()));
}

#[test]
fn derivative_of_line_and_constant() {
    let s = uniform_series(100, 2.0, |q| 3.0 + 0.4 * q);
    for cfg in [SmoothingConfig::default(), SmoothingConfig::disabled()] {
        for d in differentiate(&s, &cfg).unwrap() {
            assert!((d - 0.4).abs() < 1e-9);
        }
    }
    let c = uniform_series(100, 2.0, |_| 3.7);
    assert!(differentiate(&c, &SmoothingConfig::default()).unwrap().iter().all(|d| d.abs() < 1e-12));
}

#[test]
fn derivative_of_sine() {
    let s = uniform_series(501, 3.0, f64::sin);
    let d = differentiate(&s, &SmoothingConfig::default()).unwrap();
    let interior = 12..489;
    let worst = interior
        .map(|i| (d[i] - s.q()[i].cos()).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn trapezoid_of_derivative_recovers_voltage() {
    let f = |q: f64| 3.3 + 0.5 * q + 0.05 * (3.0 * q).sin() - 0.2 * (-q / 0.1).exp();
    let s = uniform_series(500, 2.5, f);
    let d = differentiate(&s, &SmoothingConfig::default()).unwrap();
    let q = s.q();
    let mut acc = s.v()[0];
    let mut worst = 0.0f64;
    for i in 1..q.len() {
        acc += 0.5 * (d[i] + d[i - 1]) * (q[i] - q[i - 1]);
        worst = worst.max((acc - s.v()[i]).abs());
    }
    assert!(worst <= 5e-4, "{worst}");
}

#[test]
fn resampling() {
    let s = uniform_series(200, 2.0, |q| 3.3 + 0.4 * q + 0.1 * (2.0 * q).sin());
    let same = resample(&s, 200).unwrap();
    for (a, b) in same.v().iter().zip(s.v()) {
        assert!((a - b).abs() <= 1e-12);
    }

    let line = uniform_series(37, 1.7, |q| 3.1 + 0.25 * q);
    for n in [16, 100, 777] {
        let r = resample(&line, n).unwrap();
        for (q, v) in r.q().iter().zip(r.v()) {
            assert!((v - (3.1 + 0.25 * q)).abs() < 1e-12);
        }
    }
}

#[test]
fn resample_round_trip_within_tenth_of_millivolt() {
    let (up, un) = common::analytic_curves();
    let theta = dvakit_core::ElectrodeParams::new(2.9, 2.8, 0.03, 0.95, 2.3);
    let spec = dvakit_core::synth::SynthSpec {
        sample_count: 313,
        ..dvakit_core::synth::SynthSpec::new(theta)
    };
    let (s, _) = dvakit_core::synth::generate(&spec, &up, &un).unwrap();
    let there = resample(&s, 500).unwrap();
    let back = dvakit_core::curves::MonotoneCubic::new(there.q().to_vec(), there.v().to_vec());
    let worst = s
        .q()
        .iter()
        .zip(s.v())
        .map(|(q, v)| (back.eval(*q) - v).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn rate_check_ratios() {
    let a = series(vec![0.0, 1.0, 2.50], vec![3.0, 3.6, 4.2]);
    let b = series(vec![0.0, 1.0, 2.52], vec![3.0, 3.6, 4.2]);
    let r = capacity_at_rate_check(&a, &b, 0.01);
    assert!(r.pass);
    assert!((r.ratio - 0.9921).abs() < 1e-4);
    let c = series(vec![0.0, 1.0, 2.30], vec![3.0, 3.6, 4.2]);
    let r = capacity_at_rate_check(&c, &b, 0.01);
    assert!(!r.pass);
    assert!((r.ratio - 0.9127).abs() < 1e-4);
    assert_eq!(capacity_at_rate_check(&b, &b, 0.0).ratio, 1.0);
}
