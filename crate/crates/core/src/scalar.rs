//! Complex scalar abstraction shared by series, jets and map iteration.

use crate::f128::F128;
use num_complex::Complex;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub type C64 = Complex<f64>;
pub type C128 = Complex<F128>;

/// Working precision requested by callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    Extended,
}

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Unit roundoff of the underlying real type.
    const EPS: f64;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;

    fn from_f64(x: f64) -> Self {
        Self::from_c64(C64::new(x, 0.0))
    }

    fn scale(self, x: f64) -> Self {
        self * Self::from_f64(x)
    }

    /// Modulus, rounded to f64.
    fn modulus(self) -> f64 {
        self.to_c64().norm()
    }

    fn is_finite(self) -> bool;
}

impl Scalar for C64 {
    const EPS: f64 = f64::EPSILON;

    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_c64(z: C64) -> Self {
        z
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Scalar for C128 {
    const EPS: f64 = 5.9e-39;

    fn zero() -> Self {
        C128::new(F128::ZERO, F128::ZERO)
    }
    fn one() -> Self {
        C128::new(F128::ONE, F128::ZERO)
    }
    fn from_c64(z: C64) -> Self {
        C128::new(F128::from_f64(z.re), F128::from_f64(z.im))
    }
    fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn modulus(self) -> f64 {
        (self.re * self.re + self.im * self.im).sqrt().to_f64()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}
