//! Scalar abstraction: every numeric routine in this crate is generic over
//! [`Float`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, NumAssign};

/// Floating-point scalar the numeric core is generic over.
pub trait Float:
    num_traits::Float + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
}

impl Float for f32 {}
impl Float for f64 {}

/// Shorthand for pulling an `f64` literal into the generic scalar type.
#[inline]
pub(crate) fn cast<F: Float>(x: f64) -> F {
    F::from_f64(x).expect("literal representable in scalar type")
}
