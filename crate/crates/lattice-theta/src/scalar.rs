use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the numeric core is generic over.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance used when the caller does not pass one.
    const DEFAULT_RTOL: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Natural log of the smallest positive normal value.
    fn ln_min_positive() -> Self {
        Self::min_positive_value().ln()
    }
}

impl Scalar for f64 {
    const DEFAULT_RTOL: f64 = 1e-13;
}

impl Scalar for f32 {
    const DEFAULT_RTOL: f64 = 1e-5;
}

/// Shorthand for `T::lit`.
#[inline]
pub fn c<T: Scalar>(x: f64) -> T {
    T::lit(x)
}
