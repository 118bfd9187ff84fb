use dvakit_core::curves::CapacityUnit;
use dvakit_core::features::{
    correct_to_true, degradation, npr_practical, npr_theoretical, observed_fraction, q_li, q_sei,
    theoretical_capacity, CorrectionInputs, DesignParams, FeatureSet,
};
use dvakit_core::ElectrodeParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_feasible(rng: &mut impl Rng) -> ElectrodeParams {
    let qf: f64 = rng.random_range(0.1..10.0);
    let x0: f64 = rng.random_range(0.0..0.3);
    let y0: f64 = rng.random_range(0.6..1.0);
    let qn = qf / ((1.0 - x0) * rng.random_range(0.3..1.0));
    let qp = qf / (y0 * rng.random_range(0.3..1.0));
    ElectrodeParams::new(qn, qp, x0, y0, qf)
}

#[test]
fn algebraic_identities_over_random_parameters() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    for _ in 0..1000 {
        let t = random_feasible(&mut rng);
        let f = FeatureSet::from_theta(&t).unwrap();
        assert!(((f.q_li + f.q_sei) - t.qp_tilde).abs() <= 1e-12 * t.qp_tilde);
        assert_eq!(f.npr_practical, 1.0 + f.qn_excess / f.q_full);
        let c = f.q_li_components;
        assert_eq!(c.above_window + c.in_window + c.below_window, c.total);
        let direct = t.x0_tilde * t.qn_tilde + t.y0_tilde * t.qp_tilde;
        assert!((direct - c.total).abs() <= 1e-12 * direct);
    }
}

proptest! {
    #[test]
    fn npr_practical_falls_as_full_capacity_grows(
        qn in 2.0f64..4.0, x0 in 0.0f64..0.2, qf in 0.5f64..1.5, dq in 0.01f64..0.4,
    ) {
        let a = ElectrodeParams::new(qn, 3.0, x0, 0.95, qf);
        let b = ElectrodeParams { q_full: qf + dq, ..a };
        prop_assert!(npr_practical(&b).0 < npr_practical(&a).0);
    }

    #[test]
    fn npr_practical_tracks_top_of_charge(x0 in 0.0f64..0.3, qf in 0.5f64..2.0, fx in 0.5f64..1.2) {
        let qn = qf / ((1.0 - x0) * fx);
        let t = ElectrodeParams::new(qn, 5.0, x0, 1.0, qf);
        let x100 = t.x_of_q(qf);
        let (npr, _) = npr_practical(&t);
        prop_assert_eq!(npr >= 1.0 - 1e-12, x100 <= 1.0 + 1e-12);
    }

    #[test]
    fn sei_partitions(qn in 2.0f64..4.0, qp in 2.0f64..4.0, x0 in 0.02f64..0.2, y0 in 0.8f64..0.99, d in 0.001f64..0.02) {
        let base = ElectrodeParams::new(qn, qp, x0, y0, 1.0);
        // lower y0: more SEI, same excess
        let lower_y = ElectrodeParams { y0_tilde: y0 - d, ..base };
        prop_assert!(q_sei(&lower_y) > q_sei(&base));
        prop_assert!((npr_practical(&lower_y).1 - npr_practical(&base).1).abs() < 1e-12);
        // lower x0: more SEI and more excess
        let lower_x = ElectrodeParams { x0_tilde: x0 - d, ..base };
        prop_assert!(q_sei(&lower_x) > q_sei(&base));
        prop_assert!(npr_practical(&lower_x).1 > npr_practical(&base).1);
    }

    #[test]
    fn degradation_is_scale_invariant(k in 0.01f64..100.0, a in 0.8f64..1.0, b in 0.8f64..1.0) {
        let p = ElectrodeParams::new(2.8, 2.7, 0.03, 0.95, 2.3);
        let g = ElectrodeParams::new(2.8 * a, 2.7 * b, 0.05, 0.9, 2.0);
        let d1 = degradation(&p, &g).unwrap();
        let d2 = degradation(&p.scaled(k), &g.scaled(k)).unwrap();
        prop_assert!((d1.lam_ne - d2.lam_ne).abs() < 1e-12);
        prop_assert!((d1.lam_pe - d2.lam_pe).abs() < 1e-12);
        prop_assert!((d1.lli - d2.lli).abs() < 1e-12);
    }

    #[test]
    fn correction_is_linear_in_inverse_span(lo in 0.0f64..0.4, span in 0.1f64..0.6) {
        let t = ElectrodeParams::new(2.8, 2.7, 0.03, 0.95, 2.3);
        let c = CorrectionInputs { x_min: lo, x_max: lo + span, y_min: lo, y_max: lo + span };
        let half = CorrectionInputs { x_max: lo + span / 2.0, y_max: lo + span / 2.0, ..c };
        let a = correct_to_true(&t, &c, None).unwrap();
        let b = correct_to_true(&t, &half, None).unwrap();
        prop_assert!((b.qp / a.qp - 2.0).abs() < 1e-12);
        prop_assert!((b.qn / a.qn - 2.0).abs() < 1e-12);
        prop_assert!((a.qp - t.qp_tilde / span).abs() < 1e-12 * a.qp);
    }
}

fn mohtat() -> (DesignParams, DesignParams) {
    (
        DesignParams {
            loading_mg_per_cm2: 18.50,
            active_fraction: 0.94,
            n_faces: 28,
            area_per_face_cm2: 79.20,
            specific_capacity_mah_per_g: 279.5,
        },
        DesignParams {
            loading_mg_per_cm2: 8.55,
            active_fraction: 0.95,
            n_faces: 28,
            area_per_face_cm2: 79.56,
            specific_capacity_mah_per_g: 372.0,
        },
    )
}

fn weng() -> (DesignParams, DesignParams) {
    (
        DesignParams {
            loading_mg_per_cm2: 17.23,
            active_fraction: 0.94,
            n_faces: 14,
            area_per_face_cm2: 79.20,
            specific_capacity_mah_per_g: 279.5,
        },
        DesignParams {
            loading_mg_per_cm2: 7.85,
            active_fraction: 0.97,
            n_faces: 14,
            area_per_face_cm2: 79.56,
            specific_capacity_mah_per_g: 372.0,
        },
    )
}

#[test]
fn design_capacities() {
    let (mp, mn) = mohtat();
    let (wp, wn) = weng();
    let cases = [(mp, 10.78, 4.86), (wp, 5.02, 4.53), (mn, 6.73, 3.02), (wn, 3.16, 2.83)];
    for (d, total, areal) in cases {
        let c = theoretical_capacity(&d).unwrap();
        assert!((c.total_ah - total).abs() <= 0.01, "{} vs {total}", c.total_ah);
        assert!((c.areal_mah_per_cm2 - areal).abs() <= 0.01, "{} vs {areal}", c.areal_mah_per_cm2);
    }
    assert!((npr_theoretical(&mp, &mn).unwrap() - 0.6217).abs() < 5e-4);
    assert!((npr_theoretical(&wp, &wn).unwrap() - 0.6257).abs() < 5e-4);
    assert_eq!(npr_theoretical(&mp, &mp).unwrap(), 1.0);
}

#[test]
fn observed_fractions() {
    let (mp, mn) = mohtat();
    let (wp, wn) = weng();
    let mut t = ElectrodeParams::new(2.46, 2.66, 0.02, 0.93, 2.0);
    assert!(observed_fraction(&t, &mp, &mn).is_err());
    t.unit = CapacityUnit::MilliAmpHourPerCm2;
    let m = observed_fraction(&t, &mp, &mn).unwrap();
    assert!((m.positive - 0.547).abs() < 1e-3);
    let w = observed_fraction(&t, &wp, &wn).unwrap();
    assert!((w.negative - 0.869).abs() < 1e-3);
}

#[test]
fn correction_recovers_design_capacity_from_observed_span() {
    let t = ElectrodeParams::new(3.0, 2.66, 0.02, 0.93, 2.0);
    let span = 2.66 / 4.86;
    let c = CorrectionInputs {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.2,
        y_max: 0.2 + span,
    };
    let r = correct_to_true(&t, &c, None).unwrap();
    assert!((r.qp - 4.86).abs() < 1e-12);
    assert!(r.anchored.is_none());
}

#[test]
fn cyclable_lithium_hand_value() {
    let t = ElectrodeParams::new(2.70, 2.66, 0.02, 0.93, 2.30);
    let li = q_li(&t);
    assert!((li.total - 2.5278).abs() < 1e-12);
    assert!((li.below_window - 0.054).abs() < 1e-12);
}
