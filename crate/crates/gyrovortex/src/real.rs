use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar type the whole library is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum<Self>
    + Send
    + Sync
    + Display
    + Debug
    + 'static
{
    /// Shorthand for embedding an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + Sum<T>
        + Send
        + Sync
        + Display
        + Debug
        + 'static
{
}
