//! Synthetic data: test functions, forward Laplace convolution, calibrated
//! Gaussian noise, the relative error metric and the replication harness for
//! the simulation table.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{deconvolve, Cube, EstimatorConfig, Kernel};
use crate::laguerre::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    F1,
    F2,
    F3,
    F4,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];

    /// Pointwise value:
    /// * `f1 = t e^{-t} (x1 - 1/2)^2 (x2 - 1/2)^2`
    /// * `f2 = e^{-t/2} cos(2 pi x1 x2)`
    /// * `f3 = f1 + f2`
    /// * `f4 = f2 + (x1 - 1/2)^2 (x2 - 1/2)^2`
    pub fn eval(self, t: f64, x1: f64, x2: f64) -> f64 {
        let bowl = (x1 - 0.5).powi(2) * (x2 - 0.5).powi(2);
        let wave = (2.0 * std::f64::consts::PI * x1 * x2).cos();
        let f1 = t * (-t).exp() * bowl;
        let f2 = (-t / 2.0).exp() * wave;
        match self {
            Self::F1 => f1,
            Self::F2 => f2,
            Self::F3 => f1 + f2,
            Self::F4 => f2 + bowl,
        }
    }

    /// Closed form of `int_0^t e^{-(t-z)/2} f(z, x) dz`, i.e. the convolution
    /// with the simulation kernel `g(t) = e^{-t/2}`.
    pub fn convolved_with_exp_kernel(self, t: f64, x1: f64, x2: f64) -> f64 {
        let bowl = (x1 - 0.5).powi(2) * (x2 - 0.5).powi(2);
        let wave = (2.0 * std::f64::consts::PI * x1 * x2).cos();
        let e = (-t / 2.0).exp();
        let q1 = e * (4.0 - (2.0 * t + 4.0) * e) * bowl;
        let q2 = t * e * wave;
        match self {
            Self::F1 => q1,
            Self::F2 => q2,
            Self::F3 => q1 + q2,
            Self::F4 => q2 + 2.0 * (1.0 - e) * bowl,
        }
    }

    fn index(self) -> u64 {
        match self {
            Self::F1 => 1,
            Self::F2 => 2,
            Self::F3 => 3,
            Self::F4 => 4,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index())
    }
}

impl FromStr for TestFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            _ => Err(Error::UnknownFunction(s.to_string())),
        }
    }
}

/// Spatial sample positions `x_i = i / n`, `i = 1..=n`.
pub fn spatial_points(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

pub fn eval_test_function(id: TestFunction, grid: &TimeGrid, n1: usize, n2: usize) -> Cube<f64> {
    let (x1, x2) = (spatial_points(n1), spatial_points(n2));
    Cube::from_fn(*grid, n1, n2, |k, i, j| {
        id.eval(grid.point(k), x1[i], x2[j])
    })
}

/// The test function at `t = 0`, one value per pixel.
pub fn origin_slice(id: TestFunction, n1: usize, n2: usize) -> Vec<f64> {
    let (x1, x2) = (spatial_points(n1), spatial_points(n2));
    (0..n1 * n2)
        .map(|p| id.eval(0.0, x1[p / n2], x2[p % n2]))
        .collect()
}

/// Analytic `g * f` for `g(t) = e^{-t/2}`.
pub fn exact_convolution(id: TestFunction, grid: &TimeGrid, n1: usize, n2: usize) -> Cube<f64> {
    let (x1, x2) = (spatial_points(n1), spatial_points(n2));
    Cube::from_fn(*grid, n1, n2, |k, i, j| {
        id.convolved_with_exp_kernel(grid.point(k), x1[i], x2[j])
    })
}

/// The simulation kernel `g(t) = e^{-t/2}` on the grid.
pub fn exp_kernel(grid: &TimeGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|k| (-grid.point(k) / 2.0).exp())
        .collect()
}

fn extrapolate_origin(v: &[f64]) -> f64 {
    match v {
        [] => 0.0,
        [a] => *a,
        [a, b, ..] => 2.0 * a - b,
    }
}

/// Composite trapezoid evaluation of `int_0^{t_k} g(t_k - z) f(z) dz` at every
/// sample time, given the values `f0 = f(0)` and `g0 = g(0)`.
pub fn convolve_series(f: &[f64], f0: f64, g: &[f64], g0: f64, h: f64) -> Result<Vec<f64>> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            what: "kernel samples",
            expected: f.len(),
            found: g.len(),
        });
    }
    let at = |v: &[f64], origin: f64, i: usize| if i == 0 { origin } else { v[i - 1] };
    Ok((1..=f.len())
        .map(|k| {
            let inner: f64 = (1..k).map(|j| at(g, g0, k - j) * f[j - 1]).sum();
            h * (0.5 * g[k - 1] * f0 + inner + 0.5 * g0 * f[k - 1])
        })
        .collect())
}

/// Forward model with the missing `t = 0` values of `f` and `g` linearly
/// extrapolated from the first two samples.
pub fn forward_convolve(f: &Cube<f64>, g: &[f64]) -> Result<Cube<f64>> {
    let (_, n1, n2) = f.shape();
    let f0: Vec<f64> = if f.grid().len() >= 2 {
        f.slice(0)
            .iter()
            .zip(f.slice(1))
            .map(|(a, b)| 2.0 * a - b)
            .collect()
    } else {
        f.slice(0).to_vec()
    };
    debug_assert_eq!(f0.len(), n1 * n2);
    forward_convolve_with_origin(f, &f0, g, extrapolate_origin(g))
}

/// Forward model with explicit origin values (`f0` has one entry per pixel).
pub fn forward_convolve_with_origin(
    f: &Cube<f64>,
    f0: &[f64],
    g: &[f64],
    g0: f64,
) -> Result<Cube<f64>> {
    let (n, n1, n2) = f.shape();
    if g.len() != n {
        return Err(Error::LengthMismatch {
            what: "kernel samples on the cube grid",
            expected: n,
            found: g.len(),
        });
    }
    if f0.len() != n1 * n2 {
        return Err(Error::LengthMismatch {
            what: "origin slice",
            expected: n1 * n2,
            found: f0.len(),
        });
    }
    let h = f.grid().step();
    let plane = n1 * n2;
    let series: Vec<Vec<f64>> = (0..plane)
        .into_par_iter()
        .map(|p| {
            let s: Vec<f64> = (0..n).map(|k| f.as_slice()[k * plane + p]).collect();
            convolve_series(&s, f0[p], g, g0, h)
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; n * plane];
    for (p, s) in series.iter().enumerate() {
        for (k, v) in s.iter().enumerate() {
            data[k * plane + p] = *v;
        }
    }
    Cube::new(*f.grid(), n1, n2, data)
}

/// Sample standard deviation of all entries.
pub fn sample_sd(values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
}

/// Standard normal draws from the ChaCha8 stream `(seed, stream)`.
pub fn white_noise(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `q + sigma xi` with `sigma = sd(q) / snr`. Returns the noisy cube and `sigma`.
pub fn add_noise(q: &Cube<f64>, snr: f64, seed: u64) -> Result<(Cube<f64>, f64)> {
    add_noise_stream(q, snr, seed, 0)
}

fn add_noise_stream(q: &Cube<f64>, snr: f64, seed: u64, stream: u64) -> Result<(Cube<f64>, f64)> {
    if snr.is_nan() || snr <= 0.0 {
        return Err(Error::Domain {
            what: "signal-to-noise ratio",
            value: snr,
        });
    }
    let sd = sample_sd(q.as_slice());
    if sd == 0.0 && snr.is_finite() {
        return Err(Error::Degenerate(
            "signal has zero variance, the noise level sd(q)/snr is zero".into(),
        ));
    }
    let sigma = if snr.is_infinite() { 0.0 } else { sd / snr };
    Ok((add_scaled_noise(q, sigma, seed, stream), sigma))
}

/// `q + sigma xi` for an explicit `sigma`.
pub fn add_scaled_noise(q: &Cube<f64>, sigma: f64, seed: u64, stream: u64) -> Cube<f64> {
    let z = white_noise(q.as_slice().len(), seed, stream);
    let (_, n1, n2) = q.shape();
    let data = q
        .as_slice()
        .iter()
        .zip(z)
        .map(|(v, e)| v + sigma * e)
        .collect();
    Cube::new(*q.grid(), n1, n2, data).expect("finite noisy samples")
}

/// `||fhat - f|| / ||f||` in the discrete L2 norm (uniform weights cancel).
pub fn relative_error(fhat: &Cube<f64>, f: &Cube<f64>) -> Result<f64> {
    if fhat.shape() != f.shape() || !fhat.grid().matches(f.grid()) {
        return Err(Error::ShapeMismatch(format!(
            "estimate {:?} vs truth {:?}",
            fhat.shape(),
            f.shape()
        )));
    }
    let den: f64 = f.as_slice().iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::Degenerate("reference function has zero norm".into()));
    }
    let num: f64 = fhat
        .as_slice()
        .iter()
        .zip(f.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((num / den).sqrt())
}

/// Published means and standard errors, indexed by function and SNR 3/5/7.
pub fn published_table1(id: TestFunction, snr: f64) -> Option<(f64, f64)> {
    let row = match id {
        TestFunction::F1 => [(0.1107, 0.0110), (0.0694, 0.0066), (0.0511, 0.0049)],
        TestFunction::F2 => [(0.1224, 0.0100), (0.0761, 0.0071), (0.0567, 0.0051)],
        TestFunction::F3 => [(0.1107, 0.0112), (0.0680, 0.0068), (0.0511, 0.0048)],
        TestFunction::F4 => [(0.1080, 0.0117), (0.0690, 0.0058), (0.0519, 0.0046)],
    };
    [3.0, 5.0, 7.0]
        .iter()
        .position(|s| *s == snr)
        .map(|i| row[i])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub horizon: f64,
    pub n1: usize,
    pub n2: usize,
    pub snrs: Vec<f64>,
    pub functions: Vec<TestFunction>,
    pub runs: usize,
    pub seed: u64,
    /// Skip the noise entirely (every replicate is identical).
    pub noiseless: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 32,
            horizon: 5.0,
            n1: 32,
            n2: 32,
            snrs: vec![3.0, 5.0, 7.0],
            functions: TestFunction::ALL.to_vec(),
            runs: 100,
            seed: 2024,
            noiseless: false,
        }
    }
}

impl SimConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.n, self.horizon)
    }
}

/// One replicate set: the truth `f`, the clean `q = g * f` and the kernel.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub function: TestFunction,
    pub f: Cube<f64>,
    pub q: Cube<f64>,
    pub kernel: Vec<f64>,
}

/// Builds the clean data for one test function: `g = e^{-t/2}` and `q` by
/// trapezoid quadrature with exact origin values.
pub fn scenario(id: TestFunction, grid: &TimeGrid, n1: usize, n2: usize) -> Result<Scenario> {
    let f = eval_test_function(id, grid, n1, n2);
    let kernel = exp_kernel(grid);
    let q = forward_convolve_with_origin(&f, &origin_slice(id, n1, n2), &kernel, 1.0)?;
    Ok(Scenario {
        function: id,
        f,
        q,
        kernel,
    })
}

/// Noisy observation for replicate `rep`: noise from seed `master + rep`,
/// stream chosen by the test function, so different noise levels of one
/// function reuse the same standardized noise field.
pub fn replicate(sc: &Scenario, snr: f64, master: u64, rep: usize) -> Result<(Cube<f64>, f64)> {
    add_noise_stream(
        &sc.q,
        snr,
        master.wrapping_add(rep as u64),
        sc.function.index(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub function: TestFunction,
    pub snr: f64,
    pub mean_delta: f64,
    pub stderr: f64,
    pub runs: usize,
    pub seed: u64,
    pub published_mean: Option<f64>,
    pub published_stderr: Option<f64>,
}

impl Table1Row {
    pub fn ratio(&self) -> Option<f64> {
        self.published_mean.map(|p| self.mean_delta / p)
    }
}

/// Mean and standard error of the relative error over `cfg.runs` replicates
/// for every (function, SNR) cell.
pub fn run_table1(cfg: &SimConfig, est: &EstimatorConfig) -> Result<Vec<Table1Row>> {
    if cfg.runs < 2 {
        return Err(Error::InvalidParameter("runs must be >= 2".into()));
    }
    let grid = cfg.grid()?;
    let mut rows = Vec::new();
    for &id in &cfg.functions {
        let sc = scenario(id, &grid, cfg.n1, cfg.n2)?;
        for &snr in &cfg.snrs {
            let deltas = (0..cfg.runs)
                .into_par_iter()
                .map(|rep| {
                    let y = if cfg.noiseless {
                        sc.q.clone()
                    } else {
                        replicate(&sc, snr, cfg.seed, rep)?.0
                    };
                    let est = deconvolve(&y, &Kernel::Series(sc.kernel.clone()), est)?;
                    relative_error(&est.fhat, &sc.f)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, stderr) = mean_stderr(&deltas);
            let published = published_table1(id, snr);
            rows.push(Table1Row {
                function: id,
                snr,
                mean_delta: mean,
                stderr,
                runs: cfg.runs,
                seed: cfg.seed,
                published_mean: published.map(|p| p.0),
                published_stderr: published.map(|p| p.1),
            });
        }
    }
    Ok(rows)
}

pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    (mean, sample_sd(values) / k.sqrt())
}

/// CSV with columns `function,snr,mean_delta,stderr,runs,seed,published_mean,published_stderr,ratio`.
pub fn write_table_csv<W: Write>(rows: &[Table1Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "function",
        "snr",
        "mean_delta",
        "stderr",
        "runs",
        "seed",
        "published_mean",
        "published_stderr",
        "ratio",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.function.to_string(),
            r.snr.to_string(),
            r.mean_delta.to_string(),
            r.stderr.to_string(),
            r.runs.to_string(),
            r.seed.to_string(),
            opt(r.published_mean),
            opt(r.published_stderr),
            opt(r.ratio()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text rendering of the table.
pub fn format_table(rows: &[Table1Row]) -> String {
    let mut s = format!(
        "{:<4} {:>5} {:>10} {:>9} {:>10} {:>9} {:>6}\n",
        "f", "snr", "mean", "stderr", "publ.", "(se)", "ratio"
    );
    for r in rows {
        let publ = r
            .published_mean
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        let pse = r
            .published_stderr
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        let ratio = r
            .ratio()
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:<4} {:>5} {:>10.4} {:>9.4} {:>10} {:>9} {:>6}\n",
            r.function.to_string(),
            r.snr,
            r.mean_delta,
            r.stderr,
            publ,
            pse,
            ratio
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_rel(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn test_function_examples() {
        for x in [0.1, 0.5, 0.9] {
            assert_eq!(TestFunction::F1.eval(0.0, x, 0.3), 0.0);
        }
        assert!(TestFunction::F2.eval(0.0, 0.5, 0.5).abs() < 1e-15);
        for (t, x1, x2) in [(0.3, 0.1, 0.7), (2.0, 0.9, 0.4)] {
            let d = TestFunction::F4.eval(t, x1, x2) - TestFunction::F2.eval(t, x1, x2);
            assert!((d - (x1 - 0.5f64).powi(2) * (x2 - 0.5f64).powi(2)).abs() < 1e-15);
            let s = TestFunction::F1.eval(t, x1, x2) + TestFunction::F2.eval(t, x1, x2);
            assert_eq!(TestFunction::F3.eval(t, x1, x2), s);
        }
        assert!(matches!(
            "f9".parse::<TestFunction>(),
            Err(Error::UnknownFunction(_))
        ));
        assert_eq!("F3".parse::<TestFunction>().unwrap(), TestFunction::F3);
        assert_eq!(TestFunction::F4.to_string(), "f4");
    }

    #[test]
    fn trapezoid_convolution_matches_closed_forms() {
        let grid = TimeGrid::new(1024, 40.0).unwrap();
        let h = grid.step();
        let t: Vec<f64> = (0..1024).map(|k| grid.point(k)).collect();
        let g: Vec<f64> = t.iter().map(|t| (-t / 2.0).exp()).collect();
        let f2: Vec<f64> = t.iter().map(|t| t * (-t).exp()).collect();
        let q1 = convolve_series(&g, 1.0, &g, 1.0, h).unwrap();
        let want1: Vec<f64> = t.iter().map(|t| t * (-t / 2.0).exp()).collect();
        assert!(max_rel(&q1, &want1) < 1e-3);
        let q2 = convolve_series(&f2, 0.0, &g, 1.0, h).unwrap();
        let want2: Vec<f64> = t
            .iter()
            .map(|t| (-t / 2.0).exp() * (4.0 - (2.0 * t + 4.0) * (-t / 2.0).exp()))
            .collect();
        assert!(max_rel(&q2, &want2) < 1e-3);
    }

    #[test]
    fn cube_forward_model_matches_closed_form() {
        let grid = TimeGrid::new(256, 10.0).unwrap();
        for id in TestFunction::ALL {
            let sc = scenario(id, &grid, 4, 4).unwrap();
            let exact = exact_convolution(id, &grid, 4, 4);
            assert!(max_rel(sc.q.as_slice(), exact.as_slice()) < 1e-3, "{id}");
            let extrapolated = forward_convolve(&sc.f, &sc.kernel).unwrap();
            assert!(
                max_rel(extrapolated.as_slice(), exact.as_slice()) < 1e-3,
                "{id}"
            );
        }
    }

    #[test]
    fn forward_model_is_linear_and_causal() {
        let grid = TimeGrid::new(40, 4.0).unwrap();
        let g = exp_kernel(&grid);
        let a = eval_test_function(TestFunction::F1, &grid, 2, 2);
        let b = eval_test_function(TestFunction::F2, &grid, 2, 2);
        let qa = forward_convolve(&a, &g).unwrap();
        let qb = forward_convolve(&b, &g).unwrap();
        let sum = Cube::new(
            grid,
            2,
            2,
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(x, y)| 2.0 * x - y)
                .collect(),
        )
        .unwrap();
        let qs = forward_convolve(&sum, &g).unwrap();
        for ((s, x), y) in qs.as_slice().iter().zip(qa.as_slice()).zip(qb.as_slice()) {
            assert!((s - (2.0 * x - y)).abs() < 1e-12);
        }
        let zero = Cube::<f64>::zeros(grid, 2, 2);
        assert!(forward_convolve(&zero, &g)
            .unwrap()
            .as_slice()
            .iter()
            .all(|v| *v == 0.0));

        // perturb samples k >= 20: outputs before index 20 are untouched
        let mut data = a.as_slice().to_vec();
        for v in data[20 * 4..].iter_mut() {
            *v += 1.0;
        }
        let late = Cube::new(grid, 2, 2, data).unwrap();
        let f0 = origin_slice(TestFunction::F1, 2, 2);
        let q0 = forward_convolve_with_origin(&a, &f0, &g, 1.0).unwrap();
        let q1 = forward_convolve_with_origin(&late, &f0, &g, 1.0).unwrap();
        assert_eq!(&q0.as_slice()[..20 * 4], &q1.as_slice()[..20 * 4]);
        assert_ne!(&q0.as_slice()[20 * 4..], &q1.as_slice()[20 * 4..]);
        assert!(forward_convolve(&a, &g[1..]).is_err());
    }

    #[test]
    fn noise_examples() {
        let grid = TimeGrid::new(32, 5.0).unwrap();
        let q = scenario(TestFunction::F2, &grid, 32, 32).unwrap().q;
        let (y, s) = add_noise(&q, f64::INFINITY, 1).unwrap();
        assert_eq!((y, s), (q.clone(), 0.0));
        let (a, sa) = add_noise(&q, 3.0, 77).unwrap();
        let (b, _) = add_noise(&q, 3.0, 77).unwrap();
        assert_eq!(a, b);
        let resid: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(x, y)| x - y)
            .collect();
        assert!((sample_sd(&resid) / sa - 1.0).abs() < 0.02);
        assert!((sa - sample_sd(q.as_slice()) / 3.0).abs() < 1e-15);
        let (c, _) = add_noise(&q, 3.0, 78).unwrap();
        assert_ne!(a, c);
        let zero = Cube::<f64>::zeros(grid, 4, 4);
        assert!(matches!(
            add_noise(&zero, 3.0, 1),
            Err(Error::Degenerate(_))
        ));
        assert!(add_noise(&q, 0.0, 1).is_err());
    }

    #[test]
    fn relative_error_examples() {
        let grid = TimeGrid::new(8, 1.0).unwrap();
        let f = eval_test_function(TestFunction::F4, &grid, 4, 4);
        assert_eq!(relative_error(&f, &f).unwrap(), 0.0);
        assert_eq!(relative_error(&Cube::zeros(grid, 4, 4), &f).unwrap(), 1.0);
        assert!((relative_error(&f.scaled(2.0), &f).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&f, &Cube::zeros(grid, 4, 4)).is_err());
        assert!(relative_error(&Cube::zeros(grid, 4, 2), &f).is_err());
    }

    #[test]
    fn published_values_are_embedded() {
        assert_eq!(
            published_table1(TestFunction::F1, 3.0),
            Some((0.1107, 0.0110))
        );
        assert_eq!(
            published_table1(TestFunction::F2, 7.0),
            Some((0.0567, 0.0051))
        );
        assert_eq!(published_table1(TestFunction::F2, 4.0), None);
    }

    #[test]
    fn noiseless_replicates_agree() {
        let sim = SimConfig {
            runs: 2,
            noiseless: true,
            functions: vec![TestFunction::F2],
            snrs: vec![3.0],
            ..Default::default()
        };
        let est = EstimatorConfig {
            order: crate::estimator::Order::Fixed(8),
            threshold: false,
            ..Default::default()
        };
        let rows = run_table1(&sim, &est).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].stderr, 0.0);
        assert!(run_table1(&SimConfig { runs: 1, ..sim }, &est).is_err());
    }

    #[test]
    fn table_csv_has_expected_columns() {
        let row = Table1Row {
            function: TestFunction::F1,
            snr: 3.0,
            mean_delta: 0.12,
            stderr: 0.01,
            runs: 4,
            seed: 1,
            published_mean: Some(0.1107),
            published_stderr: Some(0.011),
        };
        let mut buf = Vec::new();
        write_table_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "function,snr,mean_delta,stderr,runs,seed,published_mean,published_stderr,ratio"
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("f1,3,0.12,0.01,4,1,0.1107,0.011,"));
        assert!(format_table(&[row]).contains("f1"));
    }
}
