mod common;

use common::{analytic_curves, curve_from_fn};
use dvakit_core::model::{predict_dvdq, predict_voltage};
use dvakit_core::{ElectrodeParams, ElectrodeRole, ModelError};
use proptest::prelude::*;

fn feasible() -> impl Strategy<Value = ElectrodeParams> {
    (0.5f64..5.0, 0.0f64..0.2, 0.8f64..1.0, 0.2f64..0.9, 0.2f64..0.9).prop_map(|(qf, x0, y0, fx, fy)| {
        // fx, fy: fraction of the available stoichiometry range used
        let qn = qf / ((1.0 - x0) * fx);
        let qp = qf / (y0 * fy);
        ElectrodeParams::new(qn, qp, x0, y0, qf)
    })
}

proptest! {
    #[test]
    fn inverse_pairs(theta in feasible(), q in -3.0f64..6.0) {
        prop_assert!((theta.q_of_x(theta.x_of_q(q)) - q).abs() <= 1e-12 * (1.0 + q.abs()) * 10.0);
        let x = theta.x_of_q(q);
        let y = theta.y_of_q(q);
        prop_assert!((theta.x_of_q(theta.q_of_x(x)) - x).abs() <= 1e-12);
        prop_assert!((theta.y_of_q(theta.q_of_y(y)) - y).abs() <= 1e-12);
    }

    #[test]
    fn soc_endpoints(theta in feasible()) {
        prop_assert_eq!(theta.x_of_q(0.0), theta.x0_tilde);
        prop_assert_eq!(theta.y_of_q(0.0), theta.y0_tilde);
        let c = theta.charged_stoichiometries().unwrap();
        prop_assert_eq!(c.x_tilde, theta.x_of_q(theta.q_full));
        prop_assert_eq!(c.y_tilde, theta.y_of_q(theta.q_full));
    }

    #[test]
    fn scale_equivariance(theta in feasible(), k in 0.1f64..10.0) {
        let (up, un) = analytic_curves();
        let grid: Vec<f64> = (0..50).map(|i| theta.q_full * i as f64 / 49.0).collect();
        let scaled_grid: Vec<f64> = grid.iter().map(|q| q * k).collect();
        let s = theta.scaled(k);
        let a = predict_voltage(&theta, &grid, &up, &un).unwrap();
        let b = predict_voltage(&s, &scaled_grid, &up, &un).unwrap();
        for (i, (va, vb)) in a.iter().zip(&b).enumerate() {
            prop_assert!((va - vb).abs() < 1e-9);
            prop_assert!((theta.x_of_q(grid[i]) - s.x_of_q(scaled_grid[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_halves_give_increasing_voltage(theta in feasible()) {
        let (up, un) = analytic_curves();
        let grid: Vec<f64> = (0..2000).map(|i| theta.q_full * i as f64 / 1999.0).collect();
        let v = predict_voltage(&theta, &grid, &up, &un).unwrap();
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn analytic_dvdq_matches_central_differences() {
    let (up, un) = analytic_curves();
    let theta = ElectrodeParams::new(2.8, 2.7, 0.03, 0.95, 2.3);
    let n = 2001;
    let grid: Vec<f64> = (0..n).map(|i| theta.q_full * i as f64 / (n - 1) as f64).collect();
    let v = predict_voltage(&theta, &grid, &up, &un).unwrap();
    let d = predict_dvdq(&theta, &grid, &up, &un).unwrap();
    for i in 1..n - 1 {
        let fd = (v[i + 1] - v[i - 1]) / (grid[i + 1] - grid[i - 1]);
        assert!((fd - d[i]).abs() <= 1e-3, "q = {}: {} vs {}", grid[i], fd, d[i]);
    }
}

#[test]
fn hand_evaluated_linear_pair() {
    let up = curve_from_fn(ElectrodeRole::Positive, 11, |s| 4.2 - 0.8 * s);
    let un = curve_from_fn(ElectrodeRole::Negative, 11, |s| 0.6 - 0.5 * s);
    let theta = ElectrodeParams::new(1.0, 1.0, 0.0, 1.0, 0.8);
    assert!((predict_voltage(&theta, &[0.5], &up, &un).unwrap()[0] - 3.45).abs() < 1e-12);
    for d in predict_dvdq(&theta, &[0.1, 0.4, 0.7], &up, &un).unwrap() {
        assert!((d - 1.3).abs() < 1e-12);
    }
}

#[test]
fn infeasible_reports_first_offending_capacity() {
    let (up, un) = analytic_curves();
    let theta = ElectrodeParams::new(2.0, 3.0, 0.1, 0.95, 2.0);
    assert!(matches!(theta.validate(), Err(ModelError::Infeasible { .. })));
    let grid = [0.0, 1.0, 1.7, 1.9, 2.0];
    match predict_voltage(&theta, &grid, &up, &un) {
        Err(ModelError::OutOfDomain { q, .. }) => assert_eq!(q, 1.9),
        other => panic!("{other:?}"),
    }
}
