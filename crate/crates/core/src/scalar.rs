use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the whole library is generic over: `f32` or `f64`.
///
/// Linear algebra comes from `nalgebra`, so the trait leans on [`RealField`];
/// conversions go through `num-traits`.
pub trait Scalar:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Display
    + LowerExp
    + Debug
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon.
    const EPS: Self;

    /// Lossy cast from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 fits every supported scalar")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("usize fits every supported scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("supported scalars convert to f64")
    }
}

impl Scalar for f32 {
    const EPS: Self = f32::EPSILON;
}

impl Scalar for f64 {
    const EPS: Self = f64::EPSILON;
}
