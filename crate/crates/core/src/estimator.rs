//! Wavelet-Laguerre deconvolution: spatial wavelet transform per time slice,
//! Laguerre projection per wavelet location, Toeplitz solve, level-dependent
//! hard thresholding and synthesis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laguerre::{
    synthesize_into, LagCoeffs, LaguerreBasis, Projection, Projector, QuadratureRule, TimeGrid,
};
use crate::scalar::{count, lit, to_f64, Real};
use crate::toeplitz::{build_g, inverse_norms, select_m, InverseNormTable};
use crate::wavelet2d::{
    axis_band, estimate_sigma, forward_in_place, inverse_in_place, log2, median, reflect_extend,
    working_side, AxisBand, Family, Image, SigmaMethod, WaveletSpec,
};

/// Samples on `grid x n1 x n2`, time-major: entry `(k, i, j)` lives at
/// `k n1 n2 + i n2 + j`, with `i` indexing `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube<R> {
    grid: TimeGrid,
    n1: usize,
    n2: usize,
    data: Vec<R>,
}

impl<R: Real> Cube<R> {
    pub fn new(grid: TimeGrid, n1: usize, n2: usize, data: Vec<R>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter("spatial sides must be >= 1".into()));
        }
        let expected = grid.len() * n1 * n2;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                what: "cube samples",
                expected,
                found: data.len(),
            });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "cube sample",
                value: to_f64(data[p]),
            });
        }
        Ok(Self { grid, n1, n2, data })
    }

    pub fn zeros(grid: TimeGrid, n1: usize, n2: usize) -> Self {
        Self {
            grid,
            n1,
            n2,
            data: vec![R::zero(); grid.len() * n1 * n2],
        }
    }

    /// Fills the cube from `f(k, i, j)`.
    pub fn from_fn(
        grid: TimeGrid,
        n1: usize,
        n2: usize,
        f: impl Fn(usize, usize, usize) -> R,
    ) -> Self {
        let plane = n1 * n2;
        let data = (0..grid.len() * plane)
            .map(|p| f(p / plane, (p % plane) / n2, p % n2))
            .collect();
        Self { grid, n1, n2, data }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `(n, n1, n2)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.grid.len(), self.n1, self.n2)
    }

    pub fn spatial(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> R {
        self.data[(k * self.n1 + i) * self.n2 + j]
    }

    pub fn slice(&self, k: usize) -> &[R] {
        let plane = self.n1 * self.n2;
        &self.data[k * plane..(k + 1) * plane]
    }

    pub fn image(&self, k: usize) -> Image<R> {
        Image::new(self.n1, self.n2, self.slice(k).to_vec()).expect("slice shape")
    }

    /// Time series at pixel `(i, j)`.
    pub fn series(&self, i: usize, j: usize) -> Vec<R> {
        let plane = self.n1 * self.n2;
        let p = i * self.n2 + j;
        (0..self.grid.len())
            .map(|k| self.data[k * plane + p])
            .collect()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<R> {
        self.data
    }

    pub fn scaled(&self, c: R) -> Self {
        Self {
            data: self.data.iter().map(|v| *v * c).collect(),
            ..self.clone()
        }
    }

    /// Applies `f` to every time slice.
    pub fn map_slices(
        &self,
        n1: usize,
        n2: usize,
        f: impl Fn(Image<R>) -> Image<R> + Sync,
    ) -> Result<Self> {
        let slices: Vec<Image<R>> = (0..self.grid.len())
            .into_par_iter()
            .map(|k| f(self.image(k)))
            .collect();
        let mut data = Vec::with_capacity(self.grid.len() * n1 * n2);
        for s in slices {
            if s.shape() != (n1, n2) {
                return Err(Error::ShapeMismatch(format!(
                    "slice map produced {:?}, expected ({n1}, {n2})",
                    s.shape()
                )));
            }
            data.extend(s.into_vec());
        }
        Ok(Self {
            grid: self.grid,
            n1,
            n2,
            data,
        })
    }
}

/// Wavelet-Laguerre coefficients `theta_{l; omega}`, stored location-major:
/// entry `(l, i1, i2)` lives at `(i1 n2 + i2) M + l`. Spatial indices follow
/// the [`crate::wavelet2d`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTensor<R> {
    order: usize,
    n1: usize,
    n2: usize,
    levels: (usize, usize),
    data: Vec<R>,
}

impl<R: Real> CoeffTensor<R> {
    pub fn from_vec(
        order: usize,
        n1: usize,
        n2: usize,
        levels: (usize, usize),
        data: Vec<R>,
    ) -> Result<Self> {
        if data.len() != order * n1 * n2 {
            return Err(Error::LengthMismatch {
                what: "coefficient tensor",
                expected: order * n1 * n2,
                found: data.len(),
            });
        }
        Ok(Self {
            order,
            n1,
            n2,
            levels,
            data,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn spatial(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn levels(&self) -> (usize, usize) {
        self.levels
    }

    pub fn get(&self, l: usize, i1: usize, i2: usize) -> R {
        self.data[(i1 * self.n2 + i2) * self.order + l]
    }

    /// Coefficients `theta_{0..M; omega}` at one spatial location.
    pub fn location(&self, i1: usize, i2: usize) -> &[R] {
        let p = i1 * self.n2 + i2;
        &self.data[p * self.order..(p + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|v| **v != R::zero()).count()
    }

    fn bands(&self, p: usize) -> (AxisBand, AxisBand) {
        (
            axis_band(p / self.n2, self.n1, self.levels.0),
            axis_band(p % self.n2, self.n2, self.levels.1),
        )
    }
}

/// Laguerre order `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    /// Largest `m <= cap` with `||(G^(m))^{-1}|| <= eps^{-2}`; the cap is
    /// further limited to half the number of time samples.
    Auto {
        cap: usize,
    },
    Fixed(usize),
}

/// Spatial resolution `(J1, J2)` of the retained index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Depth {
    /// `J = floor(log2(A^2 / eps^2))`, clamped to `[1, log2 side]`.
    Auto,
    Fixed(usize, usize),
}

/// Noise level `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLevel {
    /// `T sigma_hat / sqrt(n)` from the finest wavelet coefficients.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub order: Order,
    pub depth: Depth,
    /// Threshold constant `nu`.
    pub nu: f64,
    /// Radius `A` in the resolution rule.
    pub radius: f64,
    pub eps: NoiseLevel,
    pub threshold: bool,
    pub sigma_method: SigmaMethod,
    pub family: Family,
    pub projection: Projection,
    /// Reflect the images to twice their size before transforming.
    pub symmetrize: bool,
}

/// Threshold constant calibrated on the simulation study settings.
pub const DEFAULT_NU: f64 = 0.2;
/// Ridge parameter of the default projection.
pub const DEFAULT_RIDGE: f64 = 0.01;

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            order: Order::Auto { cap: 64 },
            depth: Depth::Auto,
            nu: DEFAULT_NU,
            radius: 1.0,
            eps: NoiseLevel::Auto,
            threshold: true,
            sigma_method: SigmaMethod::Mad,
            family: Family::Db4,
            projection: Projection::Ridge(DEFAULT_RIDGE),
            symmetrize: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Domain {
                what: "threshold constant nu",
                value: self.nu,
            });
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Domain {
                what: "radius A",
                value: self.radius,
            });
        }
        if let NoiseLevel::Fixed(e) = self.eps {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Domain {
                    what: "noise level eps",
                    value: e,
                });
            }
        }
        match self.order {
            Order::Fixed(0) | Order::Auto { cap: 0 } => Err(Error::InvalidParameter(
                "Laguerre order must be >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Kernel given either by samples on the data grid or by its Laguerre
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel<R> {
    Series(Vec<R>),
    Coeffs(LagCoeffs<R>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub eps: f64,
    pub eps_estimated: bool,
    pub sigma_hat: Option<f64>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "J1")]
    pub j1: usize,
    #[serde(rename = "J2")]
    pub j2: usize,
    /// Spatial size the transform ran on, after any reflection.
    pub working_shape: (usize, usize),
    /// Nonzero coefficients per Laguerre index after thresholding.
    pub keep_counts: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Estimate<R> {
    pub fhat: Cube<R>,
    pub diagnostics: Diagnostics,
}

/// Wavelet transform of every time slice followed by Laguerre projection at
/// every spatial location: the estimated coefficients `q_{l; omega}`.
pub fn analyze<R: Real>(
    y: &Cube<R>,
    spec: &WaveletSpec<R>,
    projector: &Projector<R>,
) -> Result<CoeffTensor<R>> {
    let (n, n1, n2) = y.shape();
    if !projector.basis().grid().matches(y.grid()) {
        return Err(Error::ShapeMismatch(
            "projector grid differs from the cube grid".into(),
        ));
    }
    let (l1, l2) = spec.levels();
    if !n1.is_power_of_two() || !n2.is_power_of_two() {
        return Err(Error::NotDyadic { n1, n2 });
    }
    if l1 > log2(n1) || l2 > log2(n2) {
        return Err(Error::InvalidParameter(format!(
            "depths ({l1}, {l2}) exceed a {n1}x{n2} image"
        )));
    }
    let plane = n1 * n2;
    let mut w = y.data.clone();
    w.par_chunks_mut(plane)
        .for_each(|s| forward_in_place(s, n1, n2, spec));

    let m = projector.basis().order();
    let mut out = vec![R::zero(); plane * m];
    out.par_chunks_mut(m).enumerate().for_each_init(
        || vec![R::zero(); n],
        |series, (p, dst)| {
            for (k, s) in series.iter_mut().enumerate() {
                *s = w[k * plane + p];
            }
            projector.apply_into(series, dst);
        },
    );
    CoeffTensor::from_vec(m, n1, n2, (l1, l2), out)
}

/// Inverse of [`analyze`] for coefficients in the span of the basis.
pub fn synthesize<R: Real>(
    theta: &CoeffTensor<R>,
    spec: &WaveletSpec<R>,
    basis: &LaguerreBasis<R>,
) -> Result<Cube<R>> {
    let (n1, n2) = theta.spatial();
    if theta.order() > basis.order() {
        return Err(Error::LengthMismatch {
            what: "Laguerre coefficients (at most basis order)",
            expected: basis.order(),
            found: theta.order(),
        });
    }
    if spec.levels() != theta.levels() {
        return Err(Error::ShapeMismatch(format!(
            "tensor depths {:?} differ from wavelet depths {:?}",
            theta.levels(),
            spec.levels()
        )));
    }
    let n = basis.grid().len();
    let plane = n1 * n2;
    let m = theta.order();
    let mut series = vec![R::zero(); plane * n];
    series
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(p, dst)| synthesize_into(&theta.data[p * m..(p + 1) * m], basis, dst));
    let mut data = vec![R::zero(); n * plane];
    data.par_chunks_mut(plane)
        .enumerate()
        .for_each(|(k, slice)| {
            for (p, v) in slice.iter_mut().enumerate() {
                *v = series[p * n + k];
            }
            inverse_in_place(slice, n1, n2, spec);
        });
    Ok(Cube {
        grid: *basis.grid(),
        n1,
        n2,
        data,
    })
}

/// `(sigma_hat, eps_hat)`: median over time slices of the per-slice noise
/// estimate, and `T sigma_hat / sqrt(n)`.
pub fn estimate_eps<R: Real>(
    y: &Cube<R>,
    spec: &WaveletSpec<R>,
    method: SigmaMethod,
) -> Result<(R, R)> {
    let mut sigmas = (0..y.grid.len())
        .into_par_iter()
        .map(|k| estimate_sigma(&y.image(k), spec, method))
        .collect::<Result<Vec<R>>>()?;
    let sigma = median(&mut sigmas);
    let eps = sigma * lit(y.grid.horizon()) / count::<R>(y.grid.len()).sqrt();
    Ok((sigma, eps))
}

/// Level-dependent thresholds
/// `lambda_l = 2 eps sqrt(2 nu ln(1/eps) / (l v 1)) ||(G^(l v 1))^{-1}||`.
///
/// For `eps >= 1` the logarithm is floored at zero, giving zero thresholds.
pub fn thresholds<R: Real>(m: usize, eps: R, nu: R, norms: &InverseNormTable<R>) -> Result<Vec<R>> {
    if m > norms.max_m() {
        return Err(Error::LengthMismatch {
            what: "inverse-norm table (at least M)",
            expected: m,
            found: norms.max_m(),
        });
    }
    if eps.is_nan() || eps < R::zero() || nu.is_nan() || nu <= R::zero() {
        return Err(Error::Domain {
            what: "threshold inputs eps/nu",
            value: to_f64(eps.min(nu)),
        });
    }
    if eps >= R::one() {
        log::warn!("eps = {eps} >= 1: thresholds are all zero");
    }
    let log_term = if eps > R::zero() {
        eps.recip().ln().max(R::zero())
    } else {
        R::zero()
    };
    let two: R = lit(2.0);
    Ok((0..m)
        .map(|l| {
            let lv = l.max(1);
            two * eps * (two * nu * log_term / count::<R>(lv)).sqrt() * norms.spectral(lv)
        })
        .collect())
}

/// Zeroes every entry with `|theta_{l; omega}| <= lambda_l`. With
/// `keep_scaling`, the scaling-by-scaling coefficients are left untouched.
/// Returns the number of nonzero survivors per `l`.
pub fn hard_threshold<R: Real>(
    tensor: &mut CoeffTensor<R>,
    lambdas: &[R],
    keep_scaling: bool,
) -> Result<Vec<usize>> {
    let m = tensor.order;
    if lambdas.len() != m {
        return Err(Error::LengthMismatch {
            what: "thresholds",
            expected: m,
            found: lambdas.len(),
        });
    }
    let mut keep = vec![0usize; m];
    for p in 0..tensor.n1 * tensor.n2 {
        let protected = keep_scaling
            && matches!(
                tensor.bands(p),
                (AxisBand::Scaling { .. }, AxisBand::Scaling { .. })
            );
        for (l, v) in tensor.data[p * m..(p + 1) * m].iter_mut().enumerate() {
            if !protected && v.abs() <= lambdas[l] {
                *v = R::zero();
            }
            if *v != R::zero() {
                keep[l] += 1;
            }
        }
    }
    Ok(keep)
}

/// Zeroes all locations with a detail level `j >= J` along either axis.
fn truncate<R: Real>(tensor: &mut CoeffTensor<R>, j1: usize, j2: usize) {
    let m = tensor.order;
    for p in 0..tensor.n1 * tensor.n2 {
        let (b1, b2) = tensor.bands(p);
        let outside = |b: AxisBand, cut: usize| matches!(b, AxisBand::Detail { j, .. } if j >= cut);
        if outside(b1, j1) || outside(b2, j2) {
            tensor.data[p * m..(p + 1) * m]
                .iter_mut()
                .for_each(|v| *v = R::zero());
        }
    }
}

fn auto_depth(eps: f64, radius: f64, side: usize) -> usize {
    let max = log2(side);
    if eps <= 0.0 {
        return max;
    }
    let raw = (radius * radius / (eps * eps)).log2().floor();
    let j = if raw.is_finite() && raw > 0.0 {
        raw as usize
    } else {
        0
    };
    j.clamp(1.min(max), max)
}

/// Laguerre coefficients of a kernel sampled on `grid`.
pub fn kernel_coeffs<R: Real>(
    series: &[R],
    grid: &TimeGrid,
    order: usize,
    projection: Projection,
) -> Result<LagCoeffs<R>> {
    let basis = LaguerreBasis::new(order, grid, QuadratureRule::EndCorrected)?;
    Projector::new(basis, projection)?.apply(series)
}

/// Full estimator. Non-dyadic images (and all images when
/// `cfg.symmetrize` is set) are extended by reflection to a dyadic working
/// size and the estimate is cropped back.
pub fn deconvolve<R: Real>(
    y: &Cube<R>,
    kernel: &Kernel<R>,
    cfg: &EstimatorConfig,
) -> Result<Estimate<R>> {
    cfg.validate()?;
    let grid = *y.grid();
    let (n, n1, n2) = y.shape();
    let mut warnings = Vec::new();

    let (w1, w2) = (
        working_side(n1, cfg.symmetrize),
        working_side(n2, cfg.symmetrize),
    );
    let work = if (w1, w2) == (n1, n2) {
        y.clone()
    } else {
        y.map_slices(w1, w2, |img| reflect_extend(&img, w1, w2))?
    };
    let spec = WaveletSpec::<R>::full_depth(cfg.family, w1, w2)?;

    let (eps, sigma_hat) = match cfg.eps {
        NoiseLevel::Fixed(e) => (e, None),
        NoiseLevel::Auto => {
            let (s, e) = estimate_eps(&work, &spec, cfg.sigma_method)?;
            (to_f64(e), Some(to_f64(s)))
        }
    };

    let max_order = match cfg.order {
        Order::Fixed(m) => m,
        Order::Auto { cap } => cap.min((n / 2).max(1)),
    };
    let g = match kernel {
        Kernel::Series(s) => {
            if s.len() != n {
                return Err(Error::LengthMismatch {
                    what: "kernel samples",
                    expected: n,
                    found: s.len(),
                });
            }
            kernel_coeffs(s, &grid, max_order, cfg.projection)?
        }
        Kernel::Coeffs(c) => {
            if c.len() < max_order && matches!(cfg.order, Order::Fixed(_)) {
                return Err(Error::LengthMismatch {
                    what: "kernel coefficients (at least M)",
                    expected: max_order,
                    found: c.len(),
                });
            }
            c.resized(max_order.min(c.len()))
        }
    };
    let max_order = g.len();
    if g[0] == R::zero() {
        return Err(Error::SingularOperator { diag: 0.0 });
    }

    let thresholding = cfg.threshold && eps > 0.0;
    if cfg.threshold && eps == 0.0 {
        warnings.push("eps = 0: thresholds undefined, running threshold-free".to_string());
    }
    if thresholding && eps >= 1.0 {
        warnings.push(format!(
            "eps = {eps} >= 1: log(1/eps) floored at 0, all thresholds are zero"
        ));
    }

    let norms = if thresholding || matches!(cfg.order, Order::Auto { .. }) {
        Some(inverse_norms(&g, max_order)?)
    } else {
        None
    };
    let m = match (cfg.order, &norms) {
        (Order::Fixed(m), _) => m,
        (Order::Auto { .. }, Some(t)) => select_m(t, lit(eps), Some(max_order)),
        (Order::Auto { .. }, None) => max_order,
    };

    let (j1, j2) = match cfg.depth {
        Depth::Fixed(a, b) => {
            if a > log2(w1) || b > log2(w2) {
                return Err(Error::InvalidParameter(format!(
                    "depths ({a}, {b}) exceed the {w1}x{w2} working image"
                )));
            }
            (a, b)
        }
        Depth::Auto => (
            auto_depth(eps, cfg.radius, w1),
            auto_depth(eps, cfg.radius, w2),
        ),
    };

    let basis = LaguerreBasis::new(m, &grid, QuadratureRule::Causal)?;
    let projector = Projector::new(basis, cfg.projection)?;
    let mut theta = analyze(&work, &spec, &projector)?;

    let op = build_g(&g, m)?;
    if op.is_singular() {
        return Err(Error::SingularOperator {
            diag: to_f64(op.column()[0]),
        });
    }
    theta
        .data
        .par_chunks_mut(m)
        .for_each(|c| op.solve_in_place(c));
    truncate(&mut theta, j1, j2);

    let (lambdas, keep_counts) = match (&norms, thresholding) {
        (Some(t), true) => {
            let lam = thresholds(m, lit(eps), lit(cfg.nu), t)?;
            let keep = hard_threshold(&mut theta, &lam, true)?;
            (lam.into_iter().map(to_f64).collect(), keep)
        }
        _ => {
            let zero = vec![R::zero(); m];
            let keep = hard_threshold(&mut theta, &zero, true)?;
            (Vec::new(), keep)
        }
    };

    let full = synthesize(&theta, &spec, projector.basis())?;
    let fhat = if (w1, w2) == (n1, n2) {
        full
    } else {
        full.map_slices(n1, n2, |img| {
            crate::wavelet2d::restrict(&img, n1, n2).expect("working image covers the input")
        })?
    };

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Estimate {
        fhat,
        diagnostics: Diagnostics {
            eps,
            eps_estimated: sigma_hat.is_some(),
            sigma_hat,
            m,
            j1,
            j2,
            working_shape: (w1, w2),
            keep_counts,
            thresholds: lambdas,
            warnings,
        },
    })
}
