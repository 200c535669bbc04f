//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the solver is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Display + Debug
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Euler gamma function.
    fn gamma(self) -> Self;

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn gamma(self) -> Self {
        libm::tgammaf(self)
    }
}

impl Real for f64 {
    fn gamma(self) -> Self {
        libm::tgamma(self)
    }
}

/// Surface measure of the unit sphere S^{d-1} in R^d.
pub fn sphere_area<T: Real>(dim: usize) -> T {
    let half = T::lit(dim as f64 / 2.0);
    T::lit(2.0) * T::PI().powf(half) / half.gamma()
}

/// Volume of the unit ball in R^d.
pub fn ball_volume<T: Real>(dim: usize) -> T {
    let half = T::lit(dim as f64 / 2.0);
    T::PI().powf(half) / (half + T::one()).gamma()
}
