//! Scalar abstraction over the element type of all numeric kernels.
//!
//! Everything numeric in this crate is written against [`Scalar`] so the same
//! code runs in `f32` (the production path) and `f64` (gradient checks, which
//! need the extra mantissa to separate analytic error from round-off).

use num_traits::{Float, FromPrimitive, NumAssign};
use rand::distributions::uniform::SampleUniform;
use std::fmt::Display;
use std::iter::Sum;

/// Floating-point scalar usable in every kernel: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum<Self> + Display + SampleUniform + rustfft::FftNum
{
    /// Convert a literal constant. Panics only on non-finite input, which is
    /// a programming error at the call site.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal out of range")
    }

    /// Convert an index or count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count out of range")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic sigmoid.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}
