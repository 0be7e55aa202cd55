//! Software floating point with a 128-bit mantissa.
//!
//! `F128` stores `(-1)^neg * mant * 2^(exp - 127)` with the top bit of `mant`
//! set for every non-zero finite value. Arithmetic rounds to nearest on the
//! 128-bit mantissa, which gives a unit roundoff near 2^-128. Exponents are
//! 64-bit, so overflow and underflow do not occur in practice.

use num_traits::{Num, One, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

const TOP: u128 = 1u128 << 127;
const LO64: u128 = (1u128 << 64) - 1;
const NAN_EXP: i64 = i64::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct F128 {
    neg: bool,
    exp: i64,
    mant: u128,
}

impl F128 {
    pub const ZERO: F128 = F128 { neg: false, exp: 0, mant: 0 };
    pub const ONE: F128 = F128 { neg: false, exp: 0, mant: TOP };
    pub const NAN: F128 = F128 { neg: false, exp: NAN_EXP, mant: 0 };

    pub fn is_nan(self) -> bool {
        self.exp == NAN_EXP
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0 && !self.is_nan()
    }

    pub fn is_finite(self) -> bool {
        !self.is_nan()
    }

    fn normalized(neg: bool, exp: i64, mant: u128) -> F128 {
        if mant == 0 {
            return F128::ZERO;
        }
        let lz = mant.leading_zeros() as i64;
        F128 { neg, exp: exp - lz, mant: mant << lz }
    }

    pub fn from_f64(x: f64) -> F128 {
        if x.is_nan() || x.is_infinite() {
            return F128::NAN;
        }
        if x == 0.0 {
            return F128::ZERO;
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let field = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as u128;
        let (m, e) = if field == 0 { (frac, -1074) } else { (frac | (1u128 << 52), field - 1075) };
        // value = m * 2^e; with m shifted to the top, exp - 127 = e - lz.
        let lz = m.leading_zeros() as i64;
        F128 { neg, exp: e - lz + 127, mant: m << lz }
    }

    pub fn to_f64(self) -> f64 {
        if self.is_nan() {
            return f64::NAN;
        }
        if self.mant == 0 {
            return 0.0;
        }
        let mut m = (self.mant >> 75) as u64;
        let mut e = self.exp - 127 + 75;
        if (self.mant >> 74) & 1 == 1 {
            m += 1;
            if m == 1u64 << 53 {
                m >>= 1;
                e += 1;
            }
        }
        let v = ldexp(m as f64, e);
        if self.neg {
            -v
        } else {
            v
        }
    }

    pub fn abs(self) -> F128 {
        F128 { neg: false, ..self }
    }

    /// Multiply by 2^k exactly.
    pub fn mul_pow2(self, k: i64) -> F128 {
        if self.mant == 0 || self.is_nan() {
            return self;
        }
        F128 { exp: self.exp + k, ..self }
    }

    fn cmp_abs(self, other: F128) -> Ordering {
        match (self.mant == 0, other.mant == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.exp.cmp(&other.exp).then(self.mant.cmp(&other.mant)),
        }
    }

    fn add_impl(self, other: F128) -> F128 {
        if self.is_nan() || other.is_nan() {
            return F128::NAN;
        }
        if other.mant == 0 {
            return self;
        }
        if self.mant == 0 {
            return other;
        }
        let (a, b) = if self.cmp_abs(other) == Ordering::Less { (other, self) } else { (self, other) };
        let d = (a.exp - b.exp) as u64;
        if d > 128 {
            return a;
        }
        let (bm, round) = if d == 0 {
            (b.mant, 0u128)
        } else if d == 128 {
            (0, b.mant >> 127)
        } else {
            (b.mant >> d, (b.mant >> (d - 1)) & 1)
        };
        if a.neg == b.neg {
            let (s, carry) = a.mant.overflowing_add(bm);
            if carry {
                // Keep 128 bits: shift right and round on the dropped bit.
                let mut m = (s >> 1) | TOP;
                let mut e = a.exp + 1;
                if s & 1 == 1 {
                    let (m2, c2) = m.overflowing_add(1);
                    if c2 {
                        m = TOP;
                        e += 1;
                    } else {
                        m = m2;
                    }
                }
                F128 { neg: a.neg, exp: e, mant: m }
            } else {
                let (s2, c2) = s.overflowing_add(round);
                if c2 {
                    F128 { neg: a.neg, exp: a.exp + 1, mant: TOP }
                } else {
                    F128 { neg: a.neg, exp: a.exp, mant: s2 }
                }
            }
        } else {
            let diff = a.mant - bm - round;
            F128::normalized(a.neg, a.exp, diff)
        }
    }

    fn mul_impl(self, other: F128) -> F128 {
        if self.is_nan() || other.is_nan() {
            return F128::NAN;
        }
        if self.mant == 0 || other.mant == 0 {
            return F128::ZERO;
        }
        let (a1, a0) = (self.mant >> 64, self.mant & LO64);
        let (b1, b0) = (other.mant >> 64, other.mant & LO64);
        let lo = a0 * b0;
        let m1 = a1 * b0;
        let m2 = a0 * b1;
        let hi = a1 * b1;
        let mid = (lo >> 64) + (m1 & LO64) + (m2 & LO64);
        let mut top = hi + (m1 >> 64) + (m2 >> 64) + (mid >> 64);
        let mut bottom = (mid << 64) | (lo & LO64);
        let mut exp = self.exp + other.exp + 1;
        if top & TOP == 0 {
            top = (top << 1) | (bottom >> 127);
            bottom <<= 1;
            exp -= 1;
        }
        if bottom & TOP != 0 {
            let (t2, c) = top.overflowing_add(1);
            if c {
                top = TOP;
                exp += 1;
            } else {
                top = t2;
            }
        }
        F128 { neg: self.neg != other.neg, exp, mant: top }
    }

    pub fn recip(self) -> F128 {
        if self.is_nan() || self.mant == 0 {
            return F128::NAN;
        }
        // Scale into [1, 2), seed from f64, refine with Newton.
        let shift = self.exp;
        let m = F128 { neg: self.neg, exp: 0, mant: self.mant };
        let mut r = F128::from_f64(1.0 / m.to_f64());
        for _ in 0..3 {
            let e = F128::ONE - m * r;
            r = r + r * e;
        }
        r.mul_pow2(-shift)
    }

    pub fn sqrt(self) -> F128 {
        if self.is_nan() || self.neg && self.mant != 0 {
            return F128::NAN;
        }
        if self.mant == 0 {
            return F128::ZERO;
        }
        let mut shift = self.exp;
        let mut m = F128 { neg: false, exp: 0, mant: self.mant };
        if shift % 2 != 0 {
            m = m.mul_pow2(1);
            shift -= 1;
        }
        let mut r = F128::from_f64(m.to_f64().sqrt());
        let half = F128::from_f64(0.5);
        for _ in 0..3 {
            r = half * (r + m / r);
        }
        r.mul_pow2(shift / 2)
    }
}

fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e as i32)
}

impl fmt::Debug for F128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F128({:e})", self.to_f64())
    }
}

impl fmt::Display for F128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl PartialOrd for F128 {
    fn partial_cmp(&self, other: &F128) -> Option<Ordering> {
        if self.is_nan() || other.is_nan() {
            return None;
        }
        let d = *self - *other;
        if d.mant == 0 {
            Some(Ordering::Equal)
        } else if d.neg {
            Some(Ordering::Less)
        } else {
            Some(Ordering::Greater)
        }
    }
}

impl From<f64> for F128 {
    fn from(x: f64) -> F128 {
        F128::from_f64(x)
    }
}

impl Neg for F128 {
    type Output = F128;
    fn neg(self) -> F128 {
        if self.mant == 0 {
            return self;
        }
        F128 { neg: !self.neg, ..self }
    }
}

impl Add for F128 {
    type Output = F128;
    fn add(self, o: F128) -> F128 {
        self.add_impl(o)
    }
}

impl Sub for F128 {
    type Output = F128;
    fn sub(self, o: F128) -> F128 {
        self.add_impl(-o)
    }
}

impl Mul for F128 {
    type Output = F128;
    fn mul(self, o: F128) -> F128 {
        self.mul_impl(o)
    }
}

impl Div for F128 {
    type Output = F128;
    fn div(self, o: F128) -> F128 {
        self.mul_impl(o.recip())
    }
}

impl Rem for F128 {
    type Output = F128;
    fn rem(self, o: F128) -> F128 {
        let q = (self / o).to_f64().trunc();
        self - F128::from_f64(q) * o
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for F128 {
            fn $m(&mut self, o: F128) {
                *self = *self $op o;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);
assign_op!(RemAssign, rem_assign, %);

impl Zero for F128 {
    fn zero() -> F128 {
        F128::ZERO
    }
    fn is_zero(&self) -> bool {
        self.mant == 0 && !self.is_nan()
    }
}

impl One for F128 {
    fn one() -> F128 {
        F128::ONE
    }
}

impl Num for F128 {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<F128, Self::FromStrRadixErr> {
        s.parse::<f64>().map(F128::from_f64)
    }
}
