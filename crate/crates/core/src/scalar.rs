//! Scalar abstraction shared by the numeric parts of the crate.
//!
//! Robustness evaluation, action distributions and funnel schedules are
//! written against [`Scalar`] so they run on `f32` or `f64`. Geometry and the
//! episode runtime are fixed to `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point type usable throughout the numeric core: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 literal representable")
    }

    /// Conversion from a count or time step.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
