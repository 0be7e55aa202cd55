//! Bivariate Taylor jets truncated at a total degree.
//!
//! A `Jet` carries the Taylor polynomial in two infinitesimals `(s, t)` of a
//! quantity depending on two base variables. Polynomial maps evaluated on jets
//! give exact derivatives up to the truncation order.

use crate::scalar::Scalar;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<S> {
    order: usize,
    c: Vec<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(v: S, order: usize) -> Self {
        let mut c = vec![S::zero(); (order + 1) * (order + 1)];
        c[0] = v;
        Jet { order, c }
    }

    /// The jet of `v + s`.
    pub fn var_s(v: S, order: usize) -> Self {
        let mut j = Jet::constant(v, order);
        if order >= 1 {
            j.c[order + 1] = S::one();
        }
        j
    }

    /// The jet of `v + t`.
    pub fn var_t(v: S, order: usize) -> Self {
        let mut j = Jet::constant(v, order);
        if order >= 1 {
            j.c[1] = S::one();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> S {
        self.c[0]
    }

    pub fn set_value(&mut self, v: S) {
        self.c[0] = v;
    }

    /// Coefficient of `s^i t^j`.
    pub fn coef(&self, i: usize, j: usize) -> S {
        if i + j > self.order {
            return S::zero();
        }
        self.c[i * (self.order + 1) + j]
    }

    pub fn set_coef(&mut self, i: usize, j: usize, v: S) {
        if i + j <= self.order {
            self.c[i * (self.order + 1) + j] = v;
        }
    }

    /// First partial derivatives `(d/ds, d/dt)` at the base point.
    pub fn gradient(&self) -> (S, S) {
        (self.coef(1, 0), self.coef(0, 1))
    }

    pub fn scale(&self, a: S) -> Self {
        Jet { order: self.order, c: self.c.iter().map(|&x| x * a).collect() }
    }

    pub fn add_scalar(&self, a: S) -> Self {
        let mut r = self.clone();
        r.c[0] += a;
        r
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn recip(&self) -> Self {
        let c0 = self.c[0];
        let inv = S::one() / c0;
        // 1/(c0 (1 + u)) = inv * sum (-u)^m with u nilpotent.
        let mut u = self.scale(inv);
        u.c[0] = S::zero();
        let mu = -u;
        let mut term = Jet::constant(S::one(), self.order);
        let mut acc = term.clone();
        for _ in 0..self.order {
            term = &term * &mu;
            acc = &acc + &term;
        }
        acc.scale(inv)
    }

    pub fn div(&self, other: &Self) -> Self {
        self * &other.recip()
    }
}

impl<S: Scalar> Add for &Jet<S> {
    type Output = Jet<S>;
    fn add(self, o: &Jet<S>) -> Jet<S> {
        Jet { order: self.order, c: self.c.iter().zip(&o.c).map(|(&a, &b)| a + b).collect() }
    }
}

impl<S: Scalar> Sub for &Jet<S> {
    type Output = Jet<S>;
    fn sub(self, o: &Jet<S>) -> Jet<S> {
        Jet { order: self.order, c: self.c.iter().zip(&o.c).map(|(&a, &b)| a - b).collect() }
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        Jet { order: self.order, c: self.c.into_iter().map(|a| -a).collect() }
    }
}

impl<S: Scalar> Mul for &Jet<S> {
    type Output = Jet<S>;
    fn mul(self, o: &Jet<S>) -> Jet<S> {
        let k = self.order;
        let w = k + 1;
        let mut c = vec![S::zero(); w * w];
        for i1 in 0..=k {
            for j1 in 0..=(k - i1) {
                let a = self.c[i1 * w + j1];
                if a == S::zero() {
                    continue;
                }
                for i2 in 0..=(k - i1 - j1) {
                    for j2 in 0..=(k - i1 - j1 - i2) {
                        c[(i1 + i2) * w + j1 + j2] += a * o.c[i2 * w + j2];
                    }
                }
            }
        }
        Jet { order: k, c }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl<S: Scalar> $tr for Jet<S> {
            type Output = Jet<S>;
            fn $m(self, o: Jet<S>) -> Jet<S> {
                (&self).$m(&o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;

    #[test]
    fn product_rule_and_cross_term() {
        let x = Jet::var_s(C64::new(2.0, 0.0), 3);
        let y = Jet::var_t(C64::new(-1.0, 0.5), 3);
        // f = x^2 y
        let f = &(&x * &x) * &y;
        assert!((f.value() - C64::new(-4.0, 2.0)).norm() < 1e-14);
        // df/dx = 2 x y, df/dy = x^2, d2f/dxdy = 2x
        assert!((f.coef(1, 0) - C64::new(-4.0, 2.0)).norm() < 1e-14);
        assert!((f.coef(0, 1) - C64::new(4.0, 0.0)).norm() < 1e-14);
        assert!((f.coef(1, 1) - C64::new(4.0, 0.0)).norm() < 1e-14);
        assert!((f.coef(2, 1) - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn reciprocal_series() {
        let x = Jet::var_s(C64::new(0.5, 0.0), 4);
        let r = x.recip();
        // 1/(0.5+s) = 2 - 4 s + 8 s^2 - 16 s^3 + 32 s^4
        for (i, want) in [2.0, -4.0, 8.0, -16.0, 32.0].iter().enumerate() {
            assert!((r.coef(i, 0).re - want).abs() < 1e-12);
        }
    }
}
