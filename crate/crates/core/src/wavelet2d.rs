//! Periodized orthonormal wavelet transform on the unit square.
//!
//! The 2D transform is the tensor product of two 1D multilevel transforms,
//! one along each axis, so every coefficient belongs to a product atom
//! `psi_{j1,k1}(x1) psi_{j2,k2}(x2)` with independent levels per axis.
//!
//! Layout along an axis of length `N` decomposed `L` times: the `N / 2^L`
//! scaling coefficients come first, followed by the detail blocks from the
//! coarsest to the finest. Detail level `j` (with `2^j` coefficients)
//! occupies indices `2^j .. 2^(j+1)`, so index `2^j + k` is atom `(j, k)`.
//! The 2D array is row-major with `x1` as the row index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const HAAR: [f64; 2] = [
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
];
const DB4: [f64; 4] = [
    0.482_962_913_144_534_16,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_4,
    -0.129_409_522_551_260_37,
];
const DB6: [f64; 6] = [
    0.332_670_552_950_082_63,
    0.806_891_509_311_092_5,
    0.459_877_502_118_491_54,
    -0.135_011_020_010_254_58,
    -0.085_441_273_882_026_66,
    0.035_226_291_885_709_54,
];
const DB8: [f64; 8] = [
    0.230_377_813_308_896_48,
    0.714_846_570_552_915_7,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_09,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

/// Built-in orthogonal filters. `Db4` is the four-tap Daubechies filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Haar,
    #[default]
    Db4,
    Db6,
    Db8,
}

impl Family {
    pub fn taps(self) -> &'static [f64] {
        match self {
            Family::Haar => &HAAR,
            Family::Db4 => &DB4,
            Family::Db6 => &DB6,
            Family::Db8 => &DB8,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db2" => Ok(Family::Haar),
            "db4" | "d4" => Ok(Family::Db4),
            "db6" | "d6" => Ok(Family::Db6),
            "db8" | "d8" => Ok(Family::Db8),
            other => Err(Error::InvalidParameter(format!(
                "unknown wavelet family `{other}`"
            ))),
        }
    }
}

/// Orthogonal lowpass filter plus decomposition depths along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec<R> {
    lo: Vec<R>,
    hi: Vec<R>,
    levels1: usize,
    levels2: usize,
}

impl<R: Real> WaveletSpec<R> {
    pub fn new(family: Family, levels1: usize, levels2: usize) -> Self {
        Self::from_taps(family.taps(), levels1, levels2).expect("built-in filters are orthogonal")
    }

    /// Custom lowpass taps; rejected unless `sum h^2 = 1`, `sum h = sqrt 2`
    /// and the even shifts are orthogonal.
    pub fn from_taps(taps: &[f64], levels1: usize, levels2: usize) -> Result<Self> {
        let tol = 1e-12;
        let len = taps.len();
        if len < 2 || !len.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "wavelet filter needs an even number of taps".into(),
            ));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "filter taps sum to {sum}, expected sqrt(2)"
            )));
        }
        for shift in (0..len).step_by(2) {
            let dot: f64 = (0..len - shift).map(|i| taps[i] * taps[i + shift]).sum();
            let want = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - want).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "filter fails orthogonality at shift {shift}: {dot}"
                )));
            }
        }
        let lo: Vec<R> = taps.iter().map(|&h| lit(h)).collect();
        let hi = (0..len)
            .map(|i| {
                let v = lit::<R>(taps[len - 1 - i]);
                if i % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Ok(Self {
            lo,
            hi,
            levels1,
            levels2,
        })
    }

    /// Full dyadic depth for an `n1 x n2` image.
    pub fn full_depth(family: Family, n1: usize, n2: usize) -> Result<Self> {
        check_dyadic(n1, n2)?;
        Ok(Self::new(family, log2(n1), log2(n2)))
    }

    pub fn with_levels(&self, levels1: usize, levels2: usize) -> Self {
        Self {
            levels1,
            levels2,
            ..self.clone()
        }
    }

    pub fn levels(&self) -> (usize, usize) {
        (self.levels1, self.levels2)
    }

    pub fn lowpass(&self) -> &[R] {
        &self.lo
    }

    fn check_image(&self, n1: usize, n2: usize) -> Result<()> {
        check_dyadic(n1, n2)?;
        if self.levels1 > log2(n1) || self.levels2 > log2(n2) {
            return Err(Error::InvalidParameter(format!(
                "depths ({}, {}) exceed a {n1}x{n2} image",
                self.levels1, self.levels2
            )));
        }
        Ok(())
    }
}

pub(crate) fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

fn check_dyadic(n1: usize, n2: usize) -> Result<()> {
    if n1.is_power_of_two() && n2.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NotDyadic { n1, n2 })
    }
}

/// Dense `n1 x n2` real array, row-major, `x1` along rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<R> {
    n1: usize,
    n2: usize,
    data: Vec<R>,
}

impl<R: Real> Image<R> {
    pub fn new(n1: usize, n2: usize, data: Vec<R>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter("image sides must be >= 1".into()));
        }
        if data.len() != n1 * n2 {
            return Err(Error::LengthMismatch {
                what: "image pixels",
                expected: n1 * n2,
                found: data.len(),
            });
        }
        Ok(Self { n1, n2, data })
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            data: vec![R::zero(); n1 * n2],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let data = (0..n1 * n2).map(|p| f(p / n2, p % n2)).collect();
        Self { n1, n2, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.n2 + j]
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<R> {
        self.data
    }

    pub fn energy(&self) -> R {
        self.data.iter().map(|v| *v * *v).sum()
    }
}

/// Where an index along one axis sits in the multilevel layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisBand {
    Scaling { k: usize },
    Detail { j: usize, k: usize },
}

/// Band of `index` along an axis of length `n` decomposed `levels` times.
pub fn axis_band(index: usize, n: usize, levels: usize) -> AxisBand {
    let coarse = n >> levels;
    if index < coarse {
        AxisBand::Scaling { k: index }
    } else {
        let j = (usize::BITS - 1 - index.leading_zeros()) as usize;
        AxisBand::Detail {
            j,
            k: index - (1 << j),
        }
    }
}

/// Product atom index `omega = (band along x1, band along x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Omega {
    pub x1: AxisBand,
    pub x2: AxisBand,
}

/// Coefficients of the tensor-product transform, laid out as described in
/// the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs2D<R> {
    n1: usize,
    n2: usize,
    levels1: usize,
    levels2: usize,
    data: Vec<R>,
}

impl<R: Real> WaveletCoeffs2D<R> {
    pub fn from_vec(n1: usize, n2: usize, levels: (usize, usize), data: Vec<R>) -> Result<Self> {
        if data.len() != n1 * n2 {
            return Err(Error::LengthMismatch {
                what: "wavelet coefficients",
                expected: n1 * n2,
                found: data.len(),
            });
        }
        Ok(Self {
            n1,
            n2,
            levels1: levels.0,
            levels2: levels.1,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn levels(&self) -> (usize, usize) {
        (self.levels1, self.levels2)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn get(&self, i1: usize, i2: usize) -> R {
        self.data[i1 * self.n2 + i2]
    }

    pub fn omega(&self, i1: usize, i2: usize) -> Omega {
        Omega {
            x1: axis_band(i1, self.n1, self.levels1),
            x2: axis_band(i2, self.n2, self.levels2),
        }
    }

    pub fn energy(&self) -> R {
        self.data.iter().map(|v| *v * *v).sum()
    }
}

/// Forward transform.
pub fn dwt2<R: Real>(image: &Image<R>, spec: &WaveletSpec<R>) -> Result<WaveletCoeffs2D<R>> {
    let (n1, n2) = image.shape();
    spec.check_image(n1, n2)?;
    let mut data = image.data.clone();
    forward_in_place(&mut data, n1, n2, spec);
    Ok(WaveletCoeffs2D {
        n1,
        n2,
        levels1: spec.levels1,
        levels2: spec.levels2,
        data,
    })
}

/// Inverse transform; `coeffs` must come from a transform with the same depths.
pub fn idwt2<R: Real>(coeffs: &WaveletCoeffs2D<R>, spec: &WaveletSpec<R>) -> Result<Image<R>> {
    let (n1, n2) = coeffs.shape();
    spec.check_image(n1, n2)?;
    if coeffs.levels() != spec.levels() {
        return Err(Error::ShapeMismatch(format!(
            "coefficients have depths {:?}, spec has {:?}",
            coeffs.levels(),
            spec.levels()
        )));
    }
    let mut data = coeffs.data.clone();
    inverse_in_place(&mut data, n1, n2, spec);
    Ok(Image { n1, n2, data })
}

/// In-place forward transform of a row-major `n1 x n2` buffer. Sizes and
/// depths must already be validated.
pub(crate) fn forward_in_place<R: Real>(
    data: &mut [R],
    n1: usize,
    n2: usize,
    spec: &WaveletSpec<R>,
) {
    let mut line = vec![R::zero(); n1.max(n2)];
    let mut tmp = vec![R::zero(); n1.max(n2)];
    for row in data.chunks_exact_mut(n2) {
        multilevel(row, spec.levels2, &spec.lo, &spec.hi, &mut tmp[..n2], true);
    }
    for c in 0..n2 {
        for r in 0..n1 {
            line[r] = data[r * n2 + c];
        }
        multilevel(
            &mut line[..n1],
            spec.levels1,
            &spec.lo,
            &spec.hi,
            &mut tmp[..n1],
            true,
        );
        for r in 0..n1 {
            data[r * n2 + c] = line[r];
        }
    }
}

pub(crate) fn inverse_in_place<R: Real>(
    data: &mut [R],
    n1: usize,
    n2: usize,
    spec: &WaveletSpec<R>,
) {
    let mut line = vec![R::zero(); n1.max(n2)];
    let mut tmp = vec![R::zero(); n1.max(n2)];
    for c in 0..n2 {
        for r in 0..n1 {
            line[r] = data[r * n2 + c];
        }
        multilevel(
            &mut line[..n1],
            spec.levels1,
            &spec.lo,
            &spec.hi,
            &mut tmp[..n1],
            false,
        );
        for r in 0..n1 {
            data[r * n2 + c] = line[r];
        }
    }
    for row in data.chunks_exact_mut(n2) {
        multilevel(row, spec.levels2, &spec.lo, &spec.hi, &mut tmp[..n2], false);
    }
}

fn multilevel<R: Real>(
    x: &mut [R],
    levels: usize,
    lo: &[R],
    hi: &[R],
    tmp: &mut [R],
    forward: bool,
) {
    let n = x.len();
    if forward {
        for level in 0..levels {
            let len = n >> level;
            analysis_step(&mut x[..len], lo, hi, &mut tmp[..len]);
        }
    } else {
        for level in (0..levels).rev() {
            let len = n >> level;
            synthesis_step(&mut x[..len], lo, hi, &mut tmp[..len]);
        }
    }
}

/// One periodized analysis step: `x -> [approx | detail]`.
fn analysis_step<R: Real>(x: &mut [R], lo: &[R], hi: &[R], tmp: &mut [R]) {
    let n = x.len();
    let half = n / 2;
    for k in 0..half {
        let mut a = R::zero();
        let mut d = R::zero();
        for (i, (h, g)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * k + i) % n];
            a += *h * v;
            d += *g * v;
        }
        tmp[k] = a;
        tmp[half + k] = d;
    }
    x.copy_from_slice(tmp);
}

fn synthesis_step<R: Real>(x: &mut [R], lo: &[R], hi: &[R], tmp: &mut [R]) {
    let n = x.len();
    let half = n / 2;
    tmp.iter_mut().for_each(|v| *v = R::zero());
    for k in 0..half {
        let a = x[k];
        let d = x[half + k];
        for (i, (h, g)) in lo.iter().zip(hi).enumerate() {
            tmp[(2 * k + i) % n] += *h * a + *g * d;
        }
    }
    x.copy_from_slice(tmp);
}

/// Noise-scale estimator applied to the finest-level detail coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMethod {
    /// Median absolute deviation / 0.6745.
    #[default]
    Mad,
    /// Sample standard deviation.
    Std,
}

impl std::str::FromStr for SigmaMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mad" => Ok(SigmaMethod::Mad),
            "std" | "sd" => Ok(SigmaMethod::Std),
            other => Err(Error::InvalidParameter(format!(
                "unknown sigma method `{other}`"
            ))),
        }
    }
}

/// Noise level of an image from the coefficients that are finest along
/// both axes (one analysis step per axis).
pub fn estimate_sigma<R: Real>(
    image: &Image<R>,
    spec: &WaveletSpec<R>,
    method: SigmaMethod,
) -> Result<R> {
    let (n1, n2) = image.shape();
    if n1 < 2 || n2 < 2 || n1 % 2 != 0 || n2 % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "noise estimation needs even sides >= 2, got {n1}x{n2}"
        )));
    }
    let mut data = image.data.clone();
    let mut line = vec![R::zero(); n1];
    let mut tmp = vec![R::zero(); n1.max(n2)];
    for row in data.chunks_exact_mut(n2) {
        analysis_step(row, &spec.lo, &spec.hi, &mut tmp[..n2]);
    }
    for c in n2 / 2..n2 {
        for r in 0..n1 {
            line[r] = data[r * n2 + c];
        }
        analysis_step(&mut line, &spec.lo, &spec.hi, &mut tmp[..n1]);
        for r in 0..n1 {
            data[r * n2 + c] = line[r];
        }
    }
    let mut finest: Vec<R> = (n1 / 2..n1)
        .flat_map(|r| data[r * n2 + n2 / 2..(r + 1) * n2].iter().copied())
        .collect();
    Ok(scale_estimate(&mut finest, method))
}

pub(crate) fn scale_estimate<R: Real>(values: &mut [R], method: SigmaMethod) -> R {
    match method {
        SigmaMethod::Mad => {
            values.iter_mut().for_each(|v| *v = v.abs());
            median(values) / lit(0.6745)
        }
        SigmaMethod::Std => {
            let k = values.len();
            if k < 2 {
                return R::zero();
            }
            let mean = values.iter().copied().sum::<R>() / lit(k as f64);
            let ss: R = values.iter().map(|v| (*v - mean) * (*v - mean)).sum();
            (ss / lit((k - 1) as f64)).sqrt()
        }
    }
}

pub(crate) fn median<R: Real>(values: &mut [R]) -> R {
    let k = values.len();
    if k == 0 {
        return R::zero();
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if k % 2 == 1 {
        values[k / 2]
    } else {
        (values[k / 2 - 1] + values[k / 2]) / lit(2.0)
    }
}

#[inline]
fn reflect(i: usize, n: usize) -> usize {
    let p = i % (2 * n);
    if p < n {
        p
    } else {
        2 * n - 1 - p
    }
}

/// Even reflection across the far edges: `n1 x n2 -> 2n1 x 2n2`, periodic.
pub fn symmetrize<R: Real>(image: &Image<R>) -> Image<R> {
    let (n1, n2) = image.shape();
    reflect_extend(image, 2 * n1, 2 * n2)
}

/// Extends an image by repeated even reflection to `m1 x m2`.
pub fn reflect_extend<R: Real>(image: &Image<R>, m1: usize, m2: usize) -> Image<R> {
    let (n1, n2) = image.shape();
    Image::from_fn(m1, m2, |i, j| image.get(reflect(i, n1), reflect(j, n2)))
}

/// Top-left `n1 x n2` block.
pub fn restrict<R: Real>(image: &Image<R>, n1: usize, n2: usize) -> Result<Image<R>> {
    let (m1, m2) = image.shape();
    if n1 > m1 || n2 > m2 || n1 == 0 || n2 == 0 {
        return Err(Error::ShapeMismatch(format!(
            "cannot restrict {m1}x{m2} to {n1}x{n2}"
        )));
    }
    Ok(Image::from_fn(n1, n2, |i, j| image.get(i, j)))
}

/// Working side for an axis of length `n`: the reflected `2n` when that is
/// dyadic, otherwise the smallest power of two `>= n` (which never exceeds
/// `2n`), filled by reflection. Without symmetrization a dyadic side is kept.
pub fn working_side(n: usize, symmetrize: bool) -> usize {
    if symmetrize && (2 * n).is_power_of_two() {
        2 * n
    } else {
        n.next_power_of_two()
    }
}
