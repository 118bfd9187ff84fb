//! Monotone-preserving piecewise cubic Hermite interpolation.
//!
//! Node slopes start from the three-point (parabolic) estimate and are then
//! limited with the Fritsch-Carlson conditions, so that on every interval
//! where the data is monotone the interpolant is monotone too and never
//! leaves the range of its two end nodes.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` must be strictly increasing with at least two entries and the
    /// same length as `ys`; callers validate this.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        debug_assert!(n >= 2 && ys.len() == n);
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        let mut m = alloc::vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
            return Self { xs, ys, slopes: m };
        }
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                m[i] = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
            }
        }
        m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);

        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            // Opposite-sign slopes were already zeroed above, except at the
            // ends where the one-sided estimate can still flip.
            if a < 0.0 {
                m[i] = 0.0;
            }
            if b < 0.0 {
                m[i + 1] = 0.0;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / libm::sqrt(r2);
                m[i] = tau * a * delta[i];
                m[i + 1] = tau * b * delta[i];
            }
        }
        Self { xs, ys, slopes: m }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    fn interval(&self, x: f64) -> usize {
        let idx = self.xs.partition_point(|&node| node <= x);
        idx.saturating_sub(1).min(self.xs.len() - 2)
    }

    /// Interpolated value. `x` is assumed to lie within `[x_min, x_max]`;
    /// outside that range see [`MonotoneCubic::eval_extended`].
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval(x);
        if x == self.xs[i] {
            return self.ys[i];
        }
        if x == self.xs[i + 1] {
            return self.ys[i + 1];
        }
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1];
        // the limiter bounds v by the end nodes; this only removes rounding
        let (a, b) = (self.ys[i], self.ys[i + 1]);
        v.clamp(a.min(b), a.max(b))
    }

    /// First derivative of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h
            + d10 * self.slopes[i]
            + d11 * self.slopes[i + 1]
    }

    /// Second derivative (piecewise linear, discontinuous at nodes).
    pub fn second_derivative(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let s00 = 12.0 * t - 6.0;
        let s10 = 6.0 * t - 4.0;
        let s01 = -12.0 * t + 6.0;
        let s11 = 6.0 * t - 2.0;
        (s00 * self.ys[i] + s01 * self.ys[i + 1]) / (h * h)
            + (s10 * self.slopes[i] + s11 * self.slopes[i + 1]) / h
    }

    /// Value, first and second derivative with linear continuation beyond
    /// the node range (`C1` at the ends).
    pub fn eval_extended(&self, x: f64) -> (f64, f64, f64) {
        let lo = self.x_min();
        let hi = self.x_max();
        if x < lo {
            let m = self.slopes[0];
            (self.ys[0] + m * (x - lo), m, 0.0)
        } else if x > hi {
            let last = self.xs.len() - 1;
            let m = self.slopes[last];
            (self.ys[last] + m * (x - hi), m, 0.0)
        } else {
            (self.eval(x), self.derivative(x), self.second_derivative(x))
        }
    }
}

/// Shape-preserving one-sided three-point end slope.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_at_nodes() {
        let xs = vec![0.0, 0.1, 0.35, 0.6, 1.0];
        let ys = vec![4.2, 4.0, 3.7, 3.69, 3.1];
        let c = MonotoneCubic::new(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(c.eval(*x), *y);
        }
    }

    #[test]
    fn linear_data_reproduced() {
        let xs: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|s| 4.2 - s).collect();
        let c = MonotoneCubic::new(xs, ys);
        assert!((c.eval(0.375) - 3.825).abs() < 1e-9);
        assert!((c.derivative(0.61) + 1.0).abs() < 1e-9);
        assert!(c.second_derivative(0.61).abs() < 1e-9);
    }

    #[test]
    fn flat_segment_stays_flat() {
        let c = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0], vec![3.0, 2.0, 2.0, 1.0]);
        for k in 0..=100 {
            let x = 1.0 + k as f64 / 100.0;
            assert_eq!(c.eval(x), 2.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let xs: Vec<f64> = (0..41).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|s| 4.0 - s - 0.3 * s * s * s).collect();
        let c = MonotoneCubic::new(xs, ys);
        let h = 1e-6;
        for &x in &[0.013, 0.27, 0.5123, 0.91] {
            let fd = (c.eval(x + h) - c.eval(x - h)) / (2.0 * h);
            assert!((fd - c.derivative(x)).abs() < 1e-6);
            let fd2 = (c.derivative(x + h) - c.derivative(x - h)) / (2.0 * h);
            assert!((fd2 - c.second_derivative(x)).abs() < 1e-4);
        }
    }

    #[test]
    fn extension_is_c1() {
        let c = MonotoneCubic::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.2]);
        let (v, d, _) = c.eval_extended(1.1);
        let (v1, d1, _) = c.eval_extended(1.0);
        assert!((v - (v1 + 0.1 * d1)).abs() < 1e-15);
        assert_eq!(d, d1);
    }
}
