//! Wavelet-Laguerre estimation for functional Laplace deconvolution.
//!
//! Observations `Y(t, x) = (g * f)(t, x) + eps xi(t, x)` on a grid over
//! `(0, T] x [0, 1]^2` are inverted for `f` by expanding time profiles in
//! Laguerre functions and spatial slices in a periodized orthonormal wavelet
//! basis. Convolution with `g` becomes a lower-triangular Toeplitz system per
//! wavelet location, solved and then hard-thresholded level by level.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! simulation harness and file formats work in `f64`.

pub mod error;
pub mod estimator;
pub mod io;
pub mod laguerre;
mod linalg;
pub mod scalar;
pub mod simulate;
pub mod toeplitz;
pub mod wavelet2d;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{
    analyze, deconvolve, estimate_eps, hard_threshold, synthesize, thresholds, CoeffTensor, Cube,
    Depth, Diagnostics, Estimate, EstimatorConfig, Kernel, NoiseLevel, Order,
};
pub use laguerre::{
    eval_laguerre, project, reconstruct, smooth_series, tabulate_basis, LagCoeffs, LaguerreBasis,
    Projection, Projector, QuadratureRule, TimeGrid,
};
pub use scalar::Real;
pub use toeplitz::{
    build_g, inverse_norms, select_m, solve_lower, InverseNormTable, LowerToeplitz,
};
pub use wavelet2d::{
    dwt2, estimate_sigma, idwt2, restrict, symmetrize, Family, Image, SigmaMethod, WaveletCoeffs2D,
    WaveletSpec,
};

pub type Cube64 = Cube<f64>;
pub type Cube32 = Cube<f32>;
pub type Image64 = Image<f64>;
pub type LagCoeffs64 = LagCoeffs<f64>;
pub type LaguerreBasis64 = LaguerreBasis<f64>;
pub type LowerToeplitz64 = LowerToeplitz<f64>;
pub type WaveletSpec64 = WaveletSpec<f64>;
pub type CoeffTensor64 = CoeffTensor<f64>;
