//! Scalar abstraction shared by every numerical module.
//!
//! All engines are generic over a real floating type `R` (`f32` or `f64`);
//! amplitudes and tensor entries are `Complex<R>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use num_complex::Complex;

/// Real scalar type backing the simulation.
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Machine-precision-scaled tolerance used by structural checks.
    fn default_tolerance() -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
    fn default_tolerance() -> Self {
        1e-10
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
    fn default_tolerance() -> Self {
        1e-4
    }
}

#[inline]
pub fn c<R: Real>(re: R, im: R) -> Complex<R> {
    Complex::new(re, im)
}

#[inline]
pub fn c_real<R: Real>(re: R) -> Complex<R> {
    Complex::new(re, R::zero())
}

#[inline]
pub fn c_zero<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::zero())
}

#[inline]
pub fn c_one<R: Real>() -> Complex<R> {
    Complex::new(R::one(), R::zero())
}

#[inline]
pub fn c_i<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::one())
}

/// `e^{i phi}`.
#[inline]
pub fn c_phase<R: Real>(phi: R) -> Complex<R> {
    Complex::new(phi.cos(), phi.sin())
}

/// Squared modulus without the square root.
#[inline]
pub fn norm_sqr<R: Real>(z: Complex<R>) -> R {
    z.re * z.re + z.im * z.im
}
