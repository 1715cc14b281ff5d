//! Scalar abstraction: all solver math is generic over a real floating type.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar usable throughout the library (`f32`, `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for non-representable values.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable in scalar type")
    }

    /// Widening conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// Shorthand for a complex number with both parts given as `f64` constants.
pub fn cplx<R: Real>(re: f64, im: f64) -> Complex<R> {
    Complex::new(R::of(re), R::of(im))
}

/// Imaginary unit.
pub fn i_unit<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::one())
}

/// 2-vector of reals.
pub type Point<R> = [R; 2];

/// 2-vector of complex numbers.
pub type CVec2<R> = [Complex<R>; 2];

pub fn dot<R: Real>(a: Point<R>, b: Point<R>) -> R {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cdot<R: Real>(w: CVec2<R>, x: Point<R>) -> Complex<R> {
    w[0] * x[0] + w[1] * x[1]
}

pub fn sub<R: Real>(a: Point<R>, b: Point<R>) -> Point<R> {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn norm2<R: Real>(a: Point<R>) -> R {
    dot(a, a).sqrt()
}
