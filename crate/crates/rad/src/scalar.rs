//! Scalar abstraction so the whole pipeline can run in `f32` or `f64`.
//!
//! Feature vectors, model weights, and distance computations are generic
//! over [`Scalar`]. Probability vectors and accumulated statistics stay in
//! `f64` regardless, so selection decisions and reported metrics do not
//! depend on the storage precision more than the underlying models do.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Floating-point scalar used for features and model parameters.
///
/// Serde bounds are intentionally not supertraits: generic containers derive
/// their own `Serialize`/`Deserialize` bounds per field, and APIs that
/// round-trip scalars through JSON state the bound where they need it.
pub trait Scalar:
    'static + Float + Sum + Debug + Display + Default + Send + Sync
{
    const ZERO: Self;
    const ONE: Self;

    /// Lossy conversion from `f64` (rounds to nearest for `f32`).
    fn from_f64(v: f64) -> Self;

    /// Lossy conversion from `usize`.
    fn from_usize(v: usize) -> Self;

    /// Widening conversion to `f64`.
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn from_usize(v: usize) -> Self {
        v as f32
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn from_usize(v: usize) -> Self {
        v as f64
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}
