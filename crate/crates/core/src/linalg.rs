//! Small dense helpers: stencil solves and SPD systems of Laguerre order size.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves a square system by Gaussian elimination with partial pivoting.
/// `a` is row-major `k x k`.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = b.len();
    debug_assert_eq!(a.len(), k * k);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .unwrap();
        if a[pivot * k + col] == 0.0 {
            return Err(Error::Degenerate("singular stencil system".into()));
        }
        if pivot != col {
            for c in 0..k {
                a.swap(pivot * k + c, col * k + c);
            }
            b.swap(pivot, col);
        }
        let p = a[col * k + col];
        for row in col + 1..k {
            let f = a[row * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    a[row * k + c] -= f * a[col * k + c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut s = b[row];
        for c in row + 1..k {
            s -= a[row * k + c] * x[c];
        }
        x[row] = s / a[row * k + row];
    }
    Ok(x)
}

/// Finite-difference weights `w` with `sum_k w_k f(nodes_k) ~ f^(order)(x0)`,
/// exact for polynomials of degree `< nodes.len()`. Nodes are given in units
/// of a step `h`; the caller rescales by `h^order`.
pub(crate) fn derivative_stencil(nodes: &[f64], x0: f64, order: usize) -> Result<Vec<f64>> {
    let k = nodes.len();
    let mut v = vec![0.0; k * k];
    for p in 0..k {
        for (c, z) in nodes.iter().enumerate() {
            v[p * k + c] = (z - x0).powi(p as i32);
        }
    }
    let mut rhs = vec![0.0; k];
    rhs[order] = (1..=order).map(|i| i as f64).product();
    solve_dense(v, rhs)
}

/// In-place Cholesky factor (lower) of a symmetric positive definite matrix.
pub(crate) fn cholesky<R: Real>(a: &mut [R], k: usize) -> Result<()> {
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= a[j * k + p] * a[j * k + p];
        }
        if d <= R::zero() || !d.is_finite() {
            return Err(Error::Degenerate("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = s / d;
        }
    }
    Ok(())
}

/// Solves `L L^T x = b` given the factor from [`cholesky`].
pub(crate) fn cholesky_solve<R: Real>(l: &[R], k: usize, b: &mut [R]) {
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * b[p];
        }
        b[i] = s / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in i + 1..k {
            s -= l[p * k + i] * b[p];
        }
        b[i] = s / l[i * k + i];
    }
}
