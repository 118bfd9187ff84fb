//! Small dense solvers. Sizes here never exceed a few dozen rows by four or
//! five columns, so everything is row-major `Vec<f64>` with explicit strides.

use alloc::vec;
use alloc::vec::Vec;

/// Solves `a * x = b` for symmetric positive definite `a` (`n x n`, row-major)
/// by Cholesky factorisation. Returns `None` when `a` is not numerically
/// positive definite.
pub(crate) fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = libm::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Least-squares solution of `a * x ≈ b` for a tall `rows x cols` matrix via
/// Householder QR. `a` and `b` are consumed as scratch space.
pub(crate) fn qr_least_squares(
    a: &mut [f64],
    b: &mut [f64],
    rows: usize,
    cols: usize,
) -> Option<Vec<f64>> {
    debug_assert!(rows >= cols);
    for k in 0..cols {
        let mut norm = 0.0;
        for i in k..rows {
            norm += a[i * cols + k] * a[i * cols + k];
        }
        let norm = libm::sqrt(norm);
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[k * cols + k] > 0.0 { -norm } else { norm };
        // v = a[k.., k] - alpha * e_k, stored in place
        a[k * cols + k] -= alpha;
        let mut vnorm2 = 0.0;
        for i in k..rows {
            vnorm2 += a[i * cols + k] * a[i * cols + k];
        }
        if vnorm2 == 0.0 {
            a[k * cols + k] = alpha;
            continue;
        }
        for j in k + 1..cols {
            let mut dot = 0.0;
            for i in k..rows {
                dot += a[i * cols + k] * a[i * cols + j];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                a[i * cols + j] -= f * a[i * cols + k];
            }
        }
        let mut dot = 0.0;
        for i in k..rows {
            dot += a[i * cols + k] * b[i];
        }
        let f = 2.0 * dot / vnorm2;
        for i in k..rows {
            b[i] -= f * a[i * cols + k];
        }
        a[k * cols + k] = alpha;
    }
    let mut x = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut sum = b[i];
        for j in i + 1..cols {
            sum -= a[i * cols + j] * x[j];
        }
        let d = a[i * cols + i];
        if d == 0.0 {
            return None;
        }
        x[i] = sum / d;
    }
    Some(x)
}
