//! Laguerre functions `phi_l(t) = exp(-t/2) L_l(t)` on a uniform time grid,
//! quadrature projection of sampled series onto them, and synthesis.
//!
//! The basis is orthonormal on `[0, inf)` but data only cover `(0, T]`, so
//! every inner product is a quadrature over `[0, T]`. The truncation error is
//! of order `exp(-T/2) poly(T)` and grows quickly with the Laguerre index:
//! the Gram matrix is close to the identity only when `T` is large compared
//! to the highest order in use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{count, lit, Real};

/// Uniform sampling `t_k = T k / n`, `k = 1..=n`. There is no sample at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("time grid needs n >= 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain {
                what: "time horizon T",
                value: horizon,
            });
        }
        Ok(Self { n, horizon })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// Sample time `t_k` for zero-based `k` (i.e. `T (k+1) / n`).
    pub fn point(&self, k: usize) -> f64 {
        self.horizon * (k + 1) as f64 / self.n as f64
    }

    pub fn points<R: Real>(&self) -> Vec<R> {
        (0..self.n).map(|k| lit(self.point(k))).collect()
    }

    /// True when both grids sample the same instants (up to rounding of `T`).
    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.n == other.n && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon.max(1.0)
    }
}

/// Laguerre polynomial `L_l(t)` via the three-term recurrence.
pub fn laguerre_polynomial<R: Real>(l: usize, t: R) -> Result<R> {
    check_time(t)?;
    let mut prev = R::one();
    if l == 0 {
        return Ok(prev);
    }
    let mut cur = R::one() - t;
    for k in 1..l {
        let kk: R = count(k);
        let next = ((count::<R>(2 * k + 1) - t) * cur - kk * prev) / count(k + 1);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Laguerre function `phi_l(t) = exp(-t/2) L_l(t)`.
pub fn eval_laguerre<R: Real>(l: usize, t: R) -> Result<R> {
    Ok((-t / lit(2.0)).exp() * laguerre_polynomial(l, t)?)
}

fn check_time<R: Real>(t: R) -> Result<()> {
    if t >= R::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Laguerre argument t",
            value: t.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Coefficients over `phi_0 .. phi_{m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCoeffs<R>(Vec<R>);

impl<R: Real> LagCoeffs<R> {
    pub fn new(values: Vec<R>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "Laguerre coefficient vector must be non-empty".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite Laguerre coefficient".into()));
        }
        Ok(Self(values))
    }

    /// `(1, 0, ..., 0)` of length `m`: the coefficients of `phi_0` itself.
    pub fn unit(m: usize) -> Result<Self> {
        let mut v = vec![R::zero(); m.max(1)];
        v[0] = R::one();
        Self::new(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<R> {
        self.0
    }

    /// The first `m` coefficients, zero-padded if this vector is shorter.
    pub fn resized(&self, m: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(m.max(1), R::zero());
        Self(v)
    }
}

impl<R> std::ops::Index<usize> for LagCoeffs<R> {
    type Output = R;
    fn index(&self, i: usize) -> &R {
        &self.0[i]
    }
}

/// Quadrature rule for `int_0^T s(t) dt` from the samples `s(t_1..t_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Composite trapezoid on `0, t_1, .., t_n`; the missing value at `t = 0`
    /// is linearly extrapolated from `t_1, t_2`. Second order.
    Trapezoid,
    /// Trapezoid with Euler-Maclaurin endpoint corrections through the `h^6`
    /// term; the value and derivatives at `t = 0` come from one-sided
    /// stencils on the first eight samples.
    #[default]
    EndCorrected,
    /// As [`QuadratureRule::EndCorrected`], for integrands that vanish at
    /// `t = 0`, such as convolution outputs `q(t) = int_0^t g(t-z) f(z) dz`.
    /// No extrapolation to the origin is needed, which keeps the weights
    /// close to `h` and so does not amplify noise.
    Causal,
}

const STENCIL: usize = 8;
const CAUSAL_STENCIL: usize = 6;

/// Weights `w_k` with `sum_k w_k s(t_k) ~ int_0^T s(t) dt`.
pub fn quadrature_weights<R: Real>(grid: &TimeGrid, rule: QuadratureRule) -> Vec<R> {
    let n = grid.len();
    let h = grid.step();
    let mut w = vec![h; n];
    w[n - 1] -= h / 2.0;
    match rule {
        QuadratureRule::Trapezoid => add_origin_linear(&mut w, h),
        QuadratureRule::EndCorrected if n < 2 * STENCIL => add_origin_linear(&mut w, h),
        QuadratureRule::Causal if n < 2 * CAUSAL_STENCIL => {}
        QuadratureRule::EndCorrected => {
            let left: Vec<f64> = (1..=STENCIL).map(|k| k as f64).collect();
            let f0 = linalg::derivative_stencil(&left, 0.0, 0).expect("stencil");
            let corr = end_correction(&left, 0.0, 1.0);
            for k in 0..STENCIL {
                w[k] += h * (0.5 * f0[k] + corr[k]);
            }
            add_right_correction(&mut w, h, STENCIL);
        }
        QuadratureRule::Causal => {
            // node 0 carries the known zero value, so its weight is dropped
            let left: Vec<f64> = (0..CAUSAL_STENCIL).map(|k| k as f64).collect();
            let corr = end_correction(&left, 0.0, 1.0);
            for k in 1..CAUSAL_STENCIL {
                w[k - 1] += h * corr[k];
            }
            add_right_correction(&mut w, h, CAUSAL_STENCIL);
        }
    }
    w.into_iter().map(lit).collect()
}

/// Euler-Maclaurin endpoint terms in step units, using every odd
/// derivative the stencil can resolve. `sign` is `+1` on the left end.
fn end_correction(nodes: &[f64], at: f64, sign: f64) -> Vec<f64> {
    const TERMS: [(usize, f64); 3] = [(1, 1.0 / 12.0), (3, -1.0 / 720.0), (5, 1.0 / 30240.0)];
    let mut out = vec![0.0; nodes.len()];
    for &(order, c) in TERMS.iter().filter(|(o, _)| o + 3 <= nodes.len()) {
        let d = linalg::derivative_stencil(nodes, at, order).expect("stencil");
        for (o, v) in out.iter_mut().zip(d) {
            *o += sign * c * v;
        }
    }
    out
}

fn add_origin_linear(w: &mut [f64], h: f64) {
    if w.len() >= 2 {
        w[0] += h;
        w[1] -= h / 2.0;
    } else {
        w[0] += h / 2.0;
    }
}

fn add_right_correction(w: &mut [f64], h: f64, width: usize) {
    let n = w.len();
    let right: Vec<f64> = (0..width).map(|k| (n - width + 1 + k) as f64).collect();
    let corr = end_correction(&right, n as f64, -1.0);
    for k in 0..width {
        w[n - width + k] += h * corr[k];
    }
}

/// First `order` Laguerre functions tabulated on a grid, together with the
/// quadrature weights used for inner products.
#[derive(Debug, Clone)]
pub struct LaguerreBasis<R> {
    order: usize,
    grid: TimeGrid,
    rule: QuadratureRule,
    /// `order x n`, row `l` holds `phi_l(t_k)`.
    values: Vec<R>,
    weights: Vec<R>,
}

/// Tabulates `phi_0 .. phi_{order-1}` with the default quadrature rule.
pub fn tabulate_basis<R: Real>(order: usize, grid: &TimeGrid) -> Result<LaguerreBasis<R>> {
    LaguerreBasis::new(order, grid, QuadratureRule::default())
}

impl<R: Real> LaguerreBasis<R> {
    pub fn new(order: usize, grid: &TimeGrid, rule: QuadratureRule) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "Laguerre order M must be >= 1".into(),
            ));
        }
        let n = grid.len();
        let mut values = vec![R::zero(); order * n];
        let half: R = lit(0.5);
        for (k, t) in grid.points::<R>().into_iter().enumerate() {
            let damp = (-t * half).exp();
            let mut prev = R::one();
            let mut cur = R::one() - t;
            values[k] = damp;
            if order > 1 {
                values[n + k] = damp * cur;
            }
            for l in 1..order.saturating_sub(1) {
                let next =
                    ((count::<R>(2 * l + 1) - t) * cur - count::<R>(l) * prev) / count(l + 1);
                prev = cur;
                cur = next;
                values[(l + 1) * n + k] = damp * cur;
            }
        }
        Ok(Self {
            order,
            grid: *grid,
            rule,
            values,
            weights: quadrature_weights(grid, rule),
        })
    }

    /// Same functions, different quadrature rule.
    pub fn with_rule(&self, rule: QuadratureRule) -> Self {
        Self {
            rule,
            weights: quadrature_weights(&self.grid, rule),
            ..self.clone()
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn row(&self, l: usize) -> &[R] {
        let n = self.grid.len();
        &self.values[l * n..(l + 1) * n]
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    /// Quadrature inner product of two series on this grid.
    pub fn inner(&self, a: &[R], b: &[R]) -> R {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| *w * *x * *y)
            .sum()
    }

    /// Discrete Gram matrix `<phi_i, phi_j>` (row-major, `order x order`).
    pub fn gram(&self) -> Vec<R> {
        let m = self.order;
        let mut g = vec![R::zero(); m * m];
        for i in 0..m {
            for j in 0..=i {
                let v = self.inner(self.row(i), self.row(j));
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        g
    }

    /// Same grid and rule, fewer functions.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order == 0 || order > self.order {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a basis of order {} to {order}",
                self.order
            )));
        }
        Ok(Self {
            order,
            values: self.values[..order * self.grid.len()].to_vec(),
            ..self.clone()
        })
    }
}

/// Quadrature coefficients `int_0^T s(t) phi_l(t) dt`, `l < M`.
pub fn project<R: Real>(series: &[R], basis: &LaguerreBasis<R>) -> Result<LagCoeffs<R>> {
    check_len(series, basis)?;
    LagCoeffs::new(
        (0..basis.order())
            .map(|l| basis.inner(series, basis.row(l)))
            .collect(),
    )
}

/// Pointwise `sum_l c_l phi_l(t_k)`.
pub fn reconstruct<R: Real>(coeffs: &LagCoeffs<R>, basis: &LaguerreBasis<R>) -> Result<Vec<R>> {
    if coeffs.len() > basis.order() {
        return Err(Error::LengthMismatch {
            what: "Laguerre coefficients (at most basis order)",
            expected: basis.order(),
            found: coeffs.len(),
        });
    }
    let mut out = vec![R::zero(); basis.grid().len()];
    synthesize_into(coeffs.as_slice(), basis, &mut out);
    Ok(out)
}

pub(crate) fn synthesize_into<R: Real>(coeffs: &[R], basis: &LaguerreBasis<R>, out: &mut [R]) {
    out.iter_mut().for_each(|v| *v = R::zero());
    for (l, c) in coeffs.iter().enumerate() {
        if *c == R::zero() {
            continue;
        }
        for (o, p) in out.iter_mut().zip(basis.row(l)) {
            *o += *c * *p;
        }
    }
}

/// Projection onto `span{phi_0 .. phi_{M-1}}`: `reconstruct(project(s))`.
pub fn smooth_series<R: Real>(series: &[R], basis: &LaguerreBasis<R>) -> Result<Vec<R>> {
    reconstruct(&project(series, basis)?, basis)
}

fn check_len<R: Real>(series: &[R], basis: &LaguerreBasis<R>) -> Result<()> {
    if series.len() != basis.grid().len() {
        return Err(Error::LengthMismatch {
            what: "series samples",
            expected: basis.grid().len(),
            found: series.len(),
        });
    }
    Ok(())
}

/// How sampled series are turned into Laguerre coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "alpha")]
pub enum Projection {
    /// Plain quadrature inner products, `c = Phi W s`.
    Quadrature,
    /// Normalized ridge fit `c = (1 + a) (Gram + a I)^{-1} Phi W s`.
    ///
    /// Equal to the quadrature projection whenever the discrete Gram matrix
    /// is the identity, and to weighted least squares as `a -> 0`. On short
    /// horizons, where the truncated Gram matrix is far from the identity,
    /// it removes most of the truncation bias of the plain projection while
    /// the ridge term keeps the ill-conditioned directions from amplifying
    /// noise.
    Ridge(f64),
}

/// Precomputed linear map from samples to Laguerre coefficients.
#[derive(Debug, Clone)]
pub struct Projector<R> {
    basis: LaguerreBasis<R>,
    projection: Projection,
    /// `order x n`
    operator: Vec<R>,
}

impl<R: Real> Projector<R> {
    pub fn new(basis: LaguerreBasis<R>, projection: Projection) -> Result<Self> {
        let m = basis.order();
        let n = basis.grid().len();
        let mut operator = vec![R::zero(); m * n];
        for l in 0..m {
            for ((o, p), w) in operator[l * n..(l + 1) * n]
                .iter_mut()
                .zip(basis.row(l))
                .zip(basis.weights())
            {
                *o = *p * *w;
            }
        }
        if let Projection::Ridge(alpha) = projection {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::Domain {
                    what: "ridge parameter",
                    value: alpha,
                });
            }
            let a: R = lit(alpha);
            // Basis products do not vanish at the origin, so the Gram matrix
            // always uses the extrapolating rule.
            let mut normal = match basis.rule() {
                QuadratureRule::Causal => basis.with_rule(QuadratureRule::EndCorrected).gram(),
                _ => basis.gram(),
            };
            for i in 0..m {
                normal[i * m + i] += a;
            }
            linalg::cholesky(&mut normal, m).map_err(|_| {
                Error::Degenerate(format!(
                    "order {m} is too high for {n} samples: the ridge normal matrix is indefinite"
                ))
            })?;
            let scale = R::one() + a;
            let mut column = vec![R::zero(); m];
            for k in 0..n {
                for l in 0..m {
                    column[l] = operator[l * n + k];
                }
                linalg::cholesky_solve(&normal, m, &mut column);
                for l in 0..m {
                    operator[l * n + k] = scale * column[l];
                }
            }
        }
        Ok(Self {
            basis,
            projection,
            operator,
        })
    }

    pub fn quadrature(basis: LaguerreBasis<R>) -> Self {
        Self::new(basis, Projection::Quadrature).expect("plain projection cannot fail")
    }

    pub fn basis(&self) -> &LaguerreBasis<R> {
        &self.basis
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn apply(&self, series: &[R]) -> Result<LagCoeffs<R>> {
        check_len(series, &self.basis)?;
        let mut out = vec![R::zero(); self.basis.order()];
        self.apply_into(series, &mut out);
        LagCoeffs::new(out)
    }

    /// Unchecked variant for hot loops; `series.len()` must equal the grid size.
    pub(crate) fn apply_into(&self, series: &[R], out: &mut [R]) {
        let n = self.basis.grid().len();
        for (l, o) in out.iter_mut().enumerate() {
            *o = self.operator[l * n..(l + 1) * n]
                .iter()
                .zip(series)
                .map(|(a, s)| *a * *s)
                .sum();
        }
    }

    /// `reconstruct(apply(series))`.
    pub fn smooth(&self, series: &[R]) -> Result<Vec<R>> {
        reconstruct(&self.apply(series)?, &self.basis)
    }
}
