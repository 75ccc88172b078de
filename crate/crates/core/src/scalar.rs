//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar the estimator is generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Loosest tolerance at which algebraic identities (filter orthogonality,
    /// convergence tests) are still meaningful in this precision.
    fn identity_tol() -> Self {
        Self::epsilon() * Self::from_f64(100.0).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `R`.
#[inline]
pub fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `R`.
#[inline]
pub fn count<R: Real>(n: usize) -> R {
    R::from_usize(n).expect("count representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<R: Real>(x: R) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
