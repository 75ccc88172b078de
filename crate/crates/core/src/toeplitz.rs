//! Lower-triangular Toeplitz operators representing Laplace convolution in
//! the Laguerre basis, and growth of their inverse norms.
//!
//! With kernel coefficients `g_l`, convolution maps `theta` to `q = G theta`
//! where `G[i][j] = g_0` on the diagonal and `g_{i-j} - g_{i-j-1}` below it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::laguerre::LagCoeffs;
use crate::scalar::{count, lit, to_f64, Real};

/// Lower-triangular Toeplitz matrix stored by its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerToeplitz<R> {
    col: Vec<R>,
}

/// Builds the `m x m` convolution operator from kernel Laguerre coefficients.
/// A zero `g_0` is accepted here and reported as singular by the solvers.
pub fn build_g<R: Real>(g: &LagCoeffs<R>, m: usize) -> Result<LowerToeplitz<R>> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "Toeplitz dimension must be >= 1".into(),
        ));
    }
    if g.len() < m {
        return Err(Error::LengthMismatch {
            what: "kernel coefficients (at least the operator size)",
            expected: m,
            found: g.len(),
        });
    }
    let g = g.as_slice();
    if g[0] == R::zero() {
        log::warn!("kernel coefficient g_0 is zero; the operator is singular");
    }
    let mut col = Vec::with_capacity(m);
    col.push(g[0]);
    col.extend((1..m).map(|i| g[i] - g[i - 1]));
    Ok(LowerToeplitz { col })
}

impl<R: Real> LowerToeplitz<R> {
    pub fn from_column(col: Vec<R>) -> Result<Self> {
        if col.is_empty() {
            return Err(Error::InvalidParameter(
                "Toeplitz dimension must be >= 1".into(),
            ));
        }
        Ok(Self { col })
    }

    pub fn dim(&self) -> usize {
        self.col.len()
    }

    pub fn column(&self) -> &[R] {
        &self.col
    }

    pub fn entry(&self, i: usize, j: usize) -> R {
        if j <= i {
            self.col[i - j]
        } else {
            R::zero()
        }
    }

    /// Leading `m x m` block; still lower Toeplitz.
    pub fn leading(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim() {
            return Err(Error::InvalidParameter(format!(
                "leading block {m} of a {}-dimensional operator",
                self.dim()
            )));
        }
        Ok(Self {
            col: self.col[..m].to_vec(),
        })
    }

    pub fn is_singular(&self) -> bool {
        self.col[0] == R::zero() || !self.col[0].is_finite()
    }

    fn check_solvable(&self, rhs_len: usize) -> Result<()> {
        if rhs_len != self.dim() {
            return Err(Error::LengthMismatch {
                what: "right-hand side",
                expected: self.dim(),
                found: rhs_len,
            });
        }
        if self.is_singular() {
            return Err(Error::SingularOperator {
                diag: to_f64(self.col[0]),
            });
        }
        Ok(())
    }

    /// `G x`.
    pub fn apply(&self, x: &[R]) -> Result<Vec<R>> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                what: "vector",
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok((0..x.len())
            .map(|i| (0..=i).map(|j| self.col[i - j] * x[j]).sum())
            .collect())
    }

    /// Forward substitution for `G x = rhs`.
    pub fn solve(&self, rhs: &[R]) -> Result<Vec<R>> {
        self.check_solvable(rhs.len())?;
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Backward substitution for `G^T x = rhs`.
    pub fn solve_transpose(&self, rhs: &[R]) -> Result<Vec<R>> {
        self.check_solvable(rhs.len())?;
        let m = self.dim();
        let d = self.col[0];
        let mut x = rhs.to_vec();
        for i in (0..m).rev() {
            let tail = x[i + 1..]
                .iter()
                .zip(&self.col[1..])
                .fold(R::zero(), |acc, (xj, c)| acc + *c * *xj);
            x[i] = (x[i] - tail) / d;
        }
        Ok(x)
    }

    /// Forward substitution without checks; the caller guarantees a
    /// non-singular operator and matching length.
    pub(crate) fn solve_in_place(&self, x: &mut [R]) {
        let d = self.col[0];
        for i in 0..x.len() {
            let head = x[..i]
                .iter()
                .zip(self.col[1..=i].iter().rev())
                .fold(R::zero(), |acc, (xj, c)| acc + *c * *xj);
            x[i] = (x[i] - head) / d;
        }
    }
}

/// Free-function form of [`LowerToeplitz::solve`].
pub fn solve_lower<R: Real>(g: &LowerToeplitz<R>, rhs: &[R]) -> Result<Vec<R>> {
    g.solve(rhs)
}

/// `||(G^(m))^{-1}||` (operator 2-norm) and `||(G^(m))^{-1}||_F` for
/// `m = 1..=max_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseNormTable<R> {
    spectral: Vec<R>,
    frobenius: Vec<R>,
    last_row_sq: Vec<R>,
}

impl<R: Real> InverseNormTable<R> {
    pub fn max_m(&self) -> usize {
        self.spectral.len()
    }

    /// `||(G^(m))^{-1}||`, `m >= 1`.
    pub fn spectral(&self, m: usize) -> R {
        self.spectral[m - 1]
    }

    /// `||(G^(m))^{-1}||_F`, `m >= 1`.
    pub fn frobenius(&self, m: usize) -> R {
        self.frobenius[m - 1]
    }

    /// Squared norm of the last row of `(G^(m))^{-1}`.
    pub fn last_row_sq(&self, m: usize) -> R {
        self.last_row_sq[m - 1]
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, R, R)> + '_ {
        self.spectral
            .iter()
            .zip(&self.frobenius)
            .enumerate()
            .map(|(i, (s, f))| (i + 1, *s, *f))
    }
}

/// Power-iteration controls for the spectral norms.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0x5eed_1a6e,
        }
    }
}

/// Inverse-norm table with default power-iteration settings.
pub fn inverse_norms<R: Real>(g: &LagCoeffs<R>, max_m: usize) -> Result<InverseNormTable<R>> {
    inverse_norms_with(g, max_m, PowerIteration::default())
}

pub fn inverse_norms_with<R: Real>(
    g: &LagCoeffs<R>,
    max_m: usize,
    opts: PowerIteration,
) -> Result<InverseNormTable<R>> {
    let full = build_g(g, max_m)?;
    if full.is_singular() {
        return Err(Error::SingularOperator {
            diag: to_f64(full.col[0]),
        });
    }

    // The inverse of a lower Toeplitz matrix is lower Toeplitz, and the
    // leading block of the inverse is the inverse of the leading block. One
    // triangular solve against e_0 therefore yields every row: the last row
    // of (G^(m))^{-1} is (u_{m-1}, .., u_0).
    let mut e0 = vec![R::zero(); max_m];
    e0[0] = R::one();
    let u = full.solve(&e0)?;

    let mut frobenius = Vec::with_capacity(max_m);
    let mut last_row_sq = Vec::with_capacity(max_m);
    let mut row_sq = R::zero();
    let mut fro_sq = R::zero();
    for ui in &u {
        row_sq += *ui * *ui;
        fro_sq += row_sq;
        last_row_sq.push(row_sq);
        frobenius.push(fro_sq.sqrt());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut spectral = Vec::with_capacity(max_m);
    let mut start: Vec<R> = Vec::with_capacity(max_m);
    for m in 1..=max_m {
        let gm = full.leading(m)?;
        // warm start: previous dominant vector extended by a random entry
        start.push(lit(rng.random_range(-1.0..1.0)));
        let (sigma, v) = spectral_norm_inverse(&gm, &start, opts)?;
        spectral.push(sigma);
        start = v;
    }

    Ok(InverseNormTable {
        spectral,
        frobenius,
        last_row_sq,
    })
}

/// Largest singular value of `G^{-1}` by power iteration on `G^{-T} G^{-1}`,
/// applied through triangular solves. Returns the norm and the final iterate.
pub fn spectral_norm_inverse<R: Real>(
    g: &LowerToeplitz<R>,
    start: &[R],
    opts: PowerIteration,
) -> Result<(R, Vec<R>)> {
    let m = g.dim();
    let mut v = start.to_vec();
    if norm(&v) == R::zero() {
        v = vec![R::one(); m];
    }
    normalize(&mut v);
    let tol = lit::<R>(opts.tol).max(R::identity_tol());
    let mut lambda = R::zero();
    for _ in 0..opts.max_iter {
        let w = g.solve_transpose(&g.solve(&v)?)?;
        // Rayleigh quotient of the symmetric operator
        let next: R = v.iter().zip(&w).map(|(a, b)| *a * *b).sum();
        let nw = norm(&w);
        if nw == R::zero() || !nw.is_finite() {
            return Err(Error::Degenerate(
                "power iteration produced a non-finite iterate".into(),
            ));
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok((next.sqrt(), v));
        }
        lambda = next;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        estimate: to_f64(lambda.sqrt()),
    })
}

fn norm<R: Real>(v: &[R]) -> R {
    v.iter().map(|x| *x * *x).sum::<R>().sqrt()
}

fn normalize<R: Real>(v: &mut [R]) {
    let n = norm(v);
    v.iter_mut().for_each(|x| *x /= n);
}

/// Largest `m` with `||(G^(m))^{-1}|| <= eps^{-2}`, clamped to
/// `[1, min(max_m, cap)]`.
pub fn select_m<R: Real>(norms: &InverseNormTable<R>, eps: R, cap: Option<usize>) -> usize {
    let ceiling = cap.unwrap_or(usize::MAX).min(norms.max_m()).max(1);
    if eps <= R::zero() {
        return ceiling;
    }
    let bound = (eps * eps).recip();
    let mut best = 1;
    for m in 1..=ceiling {
        if norms.spectral(m) <= bound {
            best = m;
        }
    }
    best
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let k = count::<f64>(points.len());
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / k, sy / k);
    let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), (x, y)| {
        let dx = x.ln() - mx;
        (n + dx * (y.ln() - my), d + dx * dx)
    });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi0(m: usize) -> LagCoeffs<f64> {
        LagCoeffs::unit(m).unwrap()
    }

    #[test]
    fn build_examples() {
        let g = build_g(&phi0(3), 3).unwrap();
        assert_eq!(g.column(), &[1.0, -1.0, 0.0]);
        let g = build_g(&LagCoeffs::new(vec![2.0, 0.0, 0.0]).unwrap(), 1).unwrap();
        assert_eq!(g.column(), &[2.0]);
        let g = build_g(&LagCoeffs::new(vec![1.0, 0.5, 0.25]).unwrap(), 3).unwrap();
        assert_eq!(g.column(), &[1.0, -0.5, -0.25]);
        assert!(build_g(&phi0(3), 0).is_err());
        assert!(build_g(&phi0(2), 3).is_err());
    }

    #[test]
    fn entries_follow_toeplitz_pattern() {
        let g = LowerToeplitz::from_column(vec![3.0, 1.0, 4.0]).unwrap();
        assert_eq!(g.entry(2, 0), 4.0);
        assert_eq!(g.entry(2, 1), 1.0);
        assert_eq!(g.entry(1, 2), 0.0);
    }

    #[test]
    fn solve_examples() {
        let g = build_g(&phi0(5), 5).unwrap();
        let q = [1.0, 2.0, -1.0, 0.5, 3.0];
        let theta = solve_lower(&g, &q).unwrap();
        let mut acc = 0.0;
        for (t, qi) in theta.iter().zip(q) {
            acc += qi;
            assert!((t - acc).abs() < 1e-14);
        }
        let id = LowerToeplitz::from_column(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(id.solve(&[4.0, -2.0, 7.0]).unwrap(), vec![4.0, -2.0, 7.0]);
        let g = LowerToeplitz::from_column(vec![2.0, 1.0]).unwrap();
        assert_eq!(g.solve(&[2.0, 5.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn solve_errors() {
        let g = LowerToeplitz::from_column(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            g.solve(&[1.0, 1.0]),
            Err(Error::SingularOperator { .. })
        ));
        let g = LowerToeplitz::from_column(vec![1.0, 1.0]).unwrap();
        assert!(matches!(g.solve(&[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn transpose_solve_inverts_transpose() {
        let g = LowerToeplitz::from_column(vec![1.5, -0.3, 0.2, 0.1]).unwrap();
        let x = [0.2, -1.0, 0.5, 2.0];
        // G^T x by hand
        let gtx: Vec<f64> = (0..4)
            .map(|i| (0..4).map(|j| g.entry(j, i) * x[j]).sum())
            .collect();
        let back = g.solve_transpose(&gtx).unwrap();
        for (a, b) in back.iter().zip(x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_for_phi0_kernel() {
        let t = inverse_norms(&phi0(4), 4).unwrap();
        assert!((t.spectral(1) - 1.0).abs() < 1e-12);
        assert!((t.frobenius(1) - 1.0).abs() < 1e-12);
        assert!((t.frobenius(4).powi(2) - 10.0).abs() < 1e-12);
        // all-ones lower triangular inverse: sigma_max = 1 / (2 sin(pi / (4m + 2)))
        for m in 1..=4 {
            let exact = 1.0 / (2.0 * (std::f64::consts::PI / (4 * m + 2) as f64).sin());
            assert!((t.spectral(m) - exact).abs() < 1e-8 * exact);
            assert!((t.last_row_sq(m) - m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_kernel_rejected() {
        let g = LagCoeffs::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            inverse_norms(&g, 2),
            Err(Error::SingularOperator { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let g = build_g(&phi0(16), 16).unwrap();
        let opts = PowerIteration {
            tol: 0.0,
            max_iter: 3,
            seed: 1,
        };
        match spectral_norm_inverse(&g, &[1.0; 16], opts) {
            Err(Error::NoConvergence {
                iterations,
                estimate,
            }) => {
                assert_eq!(iterations, 3);
                assert!(estimate > 1.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn select_m_clamps() {
        let t = inverse_norms(&phi0(32), 32).unwrap();
        // eps^-2 below ||G^(1)^{-1}|| = 1
        assert_eq!(select_m(&t, 2.0, None), 1);
        assert_eq!(select_m(&t, 1e-9, None), 32);
        assert_eq!(select_m(&t, 1e-9, Some(10)), 10);
        assert_eq!(select_m(&t, 0.0, Some(7)), 7);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..20)
            .map(|x| (x as f64, 3.0 * (x as f64).powf(1.7)))
            .collect();
        assert!((loglog_slope(&pts) - 1.7).abs() < 1e-12);
    }
}
