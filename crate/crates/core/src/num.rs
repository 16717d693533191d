//! Scalar abstraction: the DSP and model code is generic over f32/f64.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert an f64 constant into the working scalar type.
#[inline]
pub fn scalar<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant converts to scalar")
}

/// Convert a count into the working scalar type.
#[inline]
pub fn scalar_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize converts to scalar")
}
