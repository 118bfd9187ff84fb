//! Savitzky-Golay smoothing and differentiation.
//!
//! Each output sample is the value (or slope) of a least-squares polynomial
//! fitted over a window of `window_length` neighbours. Near the ends the
//! window is pinned to the first/last `window_length` samples and the same
//! polynomial is evaluated off-centre, so the output has the input's length.
//! Fitting uses the actual abscissae, which on a uniform grid is identical
//! to the classical convolution coefficients.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::qr_least_squares;

/// Returns `(values, first_derivatives)` of the windowed polynomial fits.
pub(crate) fn savgol(
    x: &[f64],
    y: &[f64],
    window: usize,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    debug_assert!(window <= n && window % 2 == 1 && order + 2 <= window);
    let half = window / 2;
    let cols = order + 1;
    let mut values = vec![0.0; n];
    let mut slopes = vec![0.0; n];
    let mut a = vec![0.0; window * cols];
    let mut b = vec![0.0; window];
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - window);
        let span = x[start + window - 1] - x[start];
        let scale = 0.5 * span;
        for r in 0..window {
            let t = (x[start + r] - x[i]) / scale;
            let mut p = 1.0;
            for c in 0..cols {
                a[r * cols + c] = p;
                p *= t;
            }
            b[r] = y[start + r];
        }
        // Full-rank by construction (distinct abscissae, window > order).
        let coef = qr_least_squares(&mut a, &mut b, window, cols)
            .expect("Savitzky-Golay design matrix is full rank");
        values[i] = coef[0];
        slopes[i] = if cols > 1 { coef[1] / scale } else { 0.0 };
    }
    (values, slopes)
}

/// Second-order finite differences: centred in the interior, one-sided
/// three-point at the ends. Needs at least three samples.
pub(crate) fn finite_difference(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    debug_assert!(n >= 3);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        d[i] = (h0 * h0 * y[i + 1] - h1 * h1 * y[i - 1] + (h1 * h1 - h0 * h0) * y[i])
            / (h0 * h1 * (h0 + h1));
    }
    d[0] = one_sided(x[0], x[1], x[2], y[0], y[1], y[2]);
    d[n - 1] = one_sided(x[n - 1], x[n - 2], x[n - 3], y[n - 1], y[n - 2], y[n - 3]);
    d
}

/// Derivative at `x0` of the parabola through three points.
fn one_sided(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let a = x1 - x0;
    let b = x2 - x0;
    // Lagrange basis derivatives evaluated at x0
    let l0 = -(a + b) / (a * b);
    let l1 = b / (a * (b - a));
    let l2 = -a / (b * (b - a));
    l0 * y0 + l1 * y1 + l2 * y2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_including_ends() {
        let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - 0.5 * t + 0.2 * t * t - 0.03 * t * t * t).collect();
        let (v, d) = savgol(&x, &y, 11, 3);
        for i in 0..x.len() {
            let t = x[i];
            assert!((v[i] - y[i]).abs() < 1e-12, "value {i}");
            let exact = -0.5 + 0.4 * t - 0.09 * t * t;
            assert!((d[i] - exact).abs() < 1e-10, "slope {i}");
        }
    }

    #[test]
    fn finite_difference_exact_for_quadratic() {
        let x = [0.0, 0.1, 0.25, 0.3, 0.5];
        let y: Vec<f64> = x.iter().map(|t| 2.0 + 3.0 * t - t * t).collect();
        let d = finite_difference(&x, &y);
        for (t, di) in x.iter().zip(&d) {
            assert!((di - (3.0 - 2.0 * t)).abs() < 1e-12);
        }
    }
}
