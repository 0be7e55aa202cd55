use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::{Scalar, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Mul, Sub};

use super::{Series1, DEFAULT_DOMAIN_SLACK};

/// A truncated series `sum_{j<=nx, k<=ny} c_jk (x - center)^j y^k` on the
/// polydisc `|x - center| <= rx`, `|y| <= ry`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series2<S = C64> {
    c: Vec<S>,
    nx: usize,
    ny: usize,
    center: C64,
    rx: f64,
    ry: f64,
}

#[derive(Serialize, Deserialize)]
struct Series2Json {
    coeffs: Vec<Vec<[f64; 2]>>,
    center: [f64; 2],
    radii: [f64; 2],
    degrees: [usize; 2],
}

impl Serialize for Series2<C64> {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        let coeffs = (0..=self.nx)
            .map(|j| (0..=self.ny).map(|k| [self.get(j, k).re, self.get(j, k).im]).collect())
            .collect();
        Series2Json {
            coeffs,
            center: [self.center.re, self.center.im],
            radii: [self.rx, self.ry],
            degrees: [self.nx, self.ny],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Series2<C64> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = Series2Json::deserialize(d)?;
        let [nx, ny] = j.degrees;
        if j.coeffs.len() != nx + 1 || j.coeffs.iter().any(|r| r.len() != ny + 1) {
            return Err(serde::de::Error::custom("coefficient table does not match degrees"));
        }
        let mut s = Series2::zeros(nx, ny, C64::new(j.center[0], j.center[1]), j.radii[0], j.radii[1]);
        for (jj, row) in j.coeffs.iter().enumerate() {
            for (k, p) in row.iter().enumerate() {
                s.set(jj, k, C64::new(p[0], p[1]));
            }
        }
        Ok(s)
    }
}

impl<S: Scalar> Series2<S> {
    pub fn zeros(nx: usize, ny: usize, center: C64, rx: f64, ry: f64) -> Self {
        Series2 { c: vec![S::zero(); (nx + 1) * (ny + 1)], nx, ny, center, rx, ry }
    }

    pub fn constant(v: S, nx: usize, ny: usize, center: C64, rx: f64, ry: f64) -> Self {
        let mut s = Self::zeros(nx, ny, center, rx, ry);
        s.c[0] = v;
        s
    }

    /// The coordinate function `x`.
    pub fn var_x(nx: usize, ny: usize, center: C64, rx: f64, ry: f64) -> Self {
        let mut s = Self::constant(S::from_c64(center), nx, ny, center, rx, ry);
        if nx >= 1 {
            s.set(1, 0, S::one());
        }
        s
    }

    /// The coordinate function `y`.
    pub fn var_y(nx: usize, ny: usize, center: C64, rx: f64, ry: f64) -> Self {
        let mut s = Self::zeros(nx, ny, center, rx, ry);
        if ny >= 1 {
            s.set(0, 1, S::one());
        }
        s
    }

    /// `alpha + beta * x + gamma * y` in this frame.
    pub fn affine(&self, alpha: S, beta: S, gamma: S) -> Self {
        let x = Self::var_x(self.nx, self.ny, self.center, self.rx, self.ry);
        let y = Self::var_y(self.nx, self.ny, self.center, self.rx, self.ry);
        (&x.scale(beta) + &y.scale(gamma)).add_const(alpha)
    }

    /// Lift a one-variable series, constant in `y`.
    pub fn from_series1(s: &Series1, ny: usize, ry: f64) -> Self {
        let mut out = Self::zeros(s.degree(), ny, s.center(), s.radius(), ry);
        for (j, &a) in s.coeffs().iter().enumerate() {
            out.set(j, 0, S::from_c64(a));
        }
        out
    }

    /// Empty series in the same frame.
    pub fn like(&self) -> Self {
        Self::zeros(self.nx, self.ny, self.center, self.rx, self.ry)
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.rx, self.ry)
    }

    pub fn with_radii(&self, rx: f64, ry: f64) -> Self {
        Series2 { rx, ry, ..self.clone() }
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> S {
        self.c[j * (self.ny + 1) + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: S) {
        self.c[j * (self.ny + 1) + k] = v;
    }

    pub fn coeffs(&self) -> &[S] {
        &self.c
    }

    /// Re-truncate or zero-pad to new degrees.
    pub fn resized(&self, nx: usize, ny: usize) -> Self {
        let mut out = Self::zeros(nx, ny, self.center, self.rx, self.ry);
        for j in 0..=nx.min(self.nx) {
            for k in 0..=ny.min(self.ny) {
                out.set(j, k, self.get(j, k));
            }
        }
        out
    }

    pub fn convert<T: Scalar>(&self) -> Series2<T> {
        Series2 {
            c: self.c.iter().map(|z| T::from_c64(z.to_c64())).collect(),
            nx: self.nx,
            ny: self.ny,
            center: self.center,
            rx: self.rx,
            ry: self.ry,
        }
    }

    /// Exact conversion into the extended type (from double only).
    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(S) -> T) -> Series2<T> {
        Series2 {
            c: self.c.iter().map(|&z| f(z)).collect(),
            nx: self.nx,
            ny: self.ny,
            center: self.center,
            rx: self.rx,
            ry: self.ry,
        }
    }

    pub fn eval(&self, x: S, y: S) -> S {
        let h = x - S::from_c64(self.center);
        let mut acc = S::zero();
        for j in (0..=self.nx).rev() {
            let mut row = S::zero();
            for k in (0..=self.ny).rev() {
                row = row * y + self.get(j, k);
            }
            acc = acc * h + row;
        }
        acc
    }

    pub fn eval_jet(&self, x: &Jet<S>, y: &Jet<S>) -> Jet<S> {
        let h = x.add_scalar(-S::from_c64(self.center));
        let order = x.order();
        let mut acc = Jet::constant(S::zero(), order);
        for j in (0..=self.nx).rev() {
            let mut row = Jet::constant(S::zero(), order);
            if self.ny == 0 {
                row.set_value(self.get(j, 0));
            } else {
                for k in (0..=self.ny).rev() {
                    row = (&row * y).add_scalar(self.get(j, k));
                }
            }
            acc = (&acc * &h) + row;
        }
        acc
    }

    /// Restriction to `y = 0` as coefficients about the centre.
    pub fn at_y0(&self) -> Vec<S> {
        (0..=self.nx).map(|j| self.get(j, 0)).collect()
    }

    pub fn partial_x(&self) -> Self {
        let mut out = self.like();
        for j in 1..=self.nx {
            for k in 0..=self.ny {
                out.set(j - 1, k, self.get(j, k).scale(j as f64));
            }
        }
        out
    }

    pub fn partial_y(&self) -> Self {
        let mut out = self.like();
        for j in 0..=self.nx {
            for k in 1..=self.ny {
                out.set(j, k - 1, self.get(j, k).scale(k as f64));
            }
        }
        out
    }

    pub fn scale(&self, a: S) -> Self {
        Series2 { c: self.c.iter().map(|&z| z * a).collect(), ..self.clone() }
    }

    pub fn add_const(&self, a: S) -> Self {
        let mut s = self.clone();
        s.c[0] += a;
        s
    }

    pub fn depends_on_y(&self) -> bool {
        (0..=self.nx).any(|j| (1..=self.ny).any(|k| self.get(j, k) != S::zero()))
    }

    /// Majorant `sum |c_jk| rx^j ry^k`.
    pub fn majorant(&self) -> f64 {
        let mut acc = 0.0;
        let mut rj = 1.0;
        for j in 0..=self.nx {
            let mut rk = rj;
            for k in 0..=self.ny {
                acc += self.get(j, k).modulus() * rk;
                rk *= self.ry;
            }
            rj *= self.rx;
        }
        acc
    }

    /// Majorant bound of `sup |d/dy|` on the polydisc with the given y-radius.
    pub fn y_norm_at(&self, ry: f64) -> f64 {
        let mut acc = 0.0;
        let mut rj = 1.0;
        for j in 0..=self.nx {
            let mut rk = rj;
            for k in 1..=self.ny {
                acc += self.get(j, k).modulus() * k as f64 * rk;
                rk *= ry;
            }
            rj *= self.rx;
        }
        acc
    }

    pub fn y_norm(&self) -> f64 {
        self.y_norm_at(self.ry)
    }

    /// Bound on `sup |self - point|` over the polydisc.
    pub fn reach_from(&self, point: C64) -> f64 {
        let mut acc = (self.c[0].to_c64() - point).norm();
        let mut rj = 1.0;
        for j in 0..=self.nx {
            let mut rk = rj;
            for k in 0..=self.ny {
                if j + k > 0 {
                    acc += self.get(j, k).modulus() * rk;
                }
                rk *= self.ry;
            }
            rj *= self.rx;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.is_finite())
    }

    /// Reciprocal; requires a non-zero constant term.
    pub fn recip(&self) -> Self {
        let (nx, ny) = (self.nx, self.ny);
        let inv0 = S::one() / self.c[0];
        let mut b = self.like();
        for j in 0..=nx {
            for k in 0..=ny {
                let mut s = if j == 0 && k == 0 { S::one() } else { S::zero() };
                for j1 in 0..=j {
                    for k1 in 0..=k {
                        if j1 == 0 && k1 == 0 {
                            continue;
                        }
                        let a = self.get(j1, k1);
                        if a != S::zero() {
                            s -= a * b.get(j - j1, k - k1);
                        }
                    }
                }
                b.set(j, k, s * inv0);
            }
        }
        b
    }

    pub fn div(&self, other: &Self) -> Self {
        self * &other.recip()
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Double-precision copy of the restriction to `y = 0`.
    pub fn series1_at_y0(&self) -> Series1 {
        Series1::from_parts(self.at_y0().iter().map(|z| z.to_c64()).collect(), self.center, self.rx)
    }
}

impl<S: Scalar> Add for &Series2<S> {
    type Output = Series2<S>;
    fn add(self, o: &Series2<S>) -> Series2<S> {
        debug_assert!(self.nx == o.nx && self.ny == o.ny && self.center == o.center);
        Series2 { c: self.c.iter().zip(&o.c).map(|(&a, &b)| a + b).collect(), ..self.clone() }
    }
}

impl<S: Scalar> Sub for &Series2<S> {
    type Output = Series2<S>;
    fn sub(self, o: &Series2<S>) -> Series2<S> {
        debug_assert!(self.nx == o.nx && self.ny == o.ny && self.center == o.center);
        Series2 { c: self.c.iter().zip(&o.c).map(|(&a, &b)| a - b).collect(), ..self.clone() }
    }
}

impl<S: Scalar> Mul for &Series2<S> {
    type Output = Series2<S>;
    fn mul(self, o: &Series2<S>) -> Series2<S> {
        debug_assert!(self.nx == o.nx && self.ny == o.ny && self.center == o.center);
        let (nx, ny) = (self.nx, self.ny);
        let w = ny + 1;
        let mut c = vec![S::zero(); (nx + 1) * w];
        for j1 in 0..=nx {
            for k1 in 0..=ny {
                let a = self.c[j1 * w + k1];
                if a == S::zero() {
                    continue;
                }
                for j2 in 0..=(nx - j1) {
                    let base_o = j2 * w;
                    let base_c = (j1 + j2) * w + k1;
                    for k2 in 0..=(ny - k1) {
                        c[base_c + k2] += a * o.c[base_o + k2];
                    }
                }
            }
        }
        Series2 { c, ..self.clone() }
    }
}

/// Truncated composition `f(g1, g2)` with the default domain slack.
pub fn compose2<S: Scalar>(f: &Series2<S>, g1: &Series2<S>, g2: &Series2<S>) -> Result<Series2<S>> {
    compose2_with_slack(f, g1, g2, DEFAULT_DOMAIN_SLACK)
}

/// Truncated composition `f(g1, g2)` in the frame of `g1`.
///
/// The x-argument must stay within `f`'s x-radius (up to slack); the
/// y-argument is checked only when `f` depends on `y`.
pub fn compose2_with_slack<S: Scalar>(
    f: &Series2<S>,
    g1: &Series2<S>,
    g2: &Series2<S>,
    slack: f64,
) -> Result<Series2<S>> {
    let reach = g1.reach_from(f.center);
    if !(reach <= f.rx * (1.0 + slack)) {
        return Err(Error::DomainEscape { reach, radius: f.rx });
    }
    if f.depends_on_y() {
        let reach_y = g2.reach_from(C64::new(0.0, 0.0));
        if !(reach_y <= f.ry * (1.0 + slack)) {
            return Err(Error::DomainEscape { reach: reach_y, radius: f.ry });
        }
    }
    Ok(compose2_unchecked(f, g1, g2))
}

pub(crate) fn compose2_unchecked<S: Scalar>(f: &Series2<S>, g1: &Series2<S>, g2: &Series2<S>) -> Series2<S> {
    let frame = g1.like();
    let h = g1.add_const(-S::from_c64(f.center));
    let use_y = f.depends_on_y();
    let mut pows = vec![frame.add_const(S::one())];
    if use_y {
        for k in 1..=f.ny {
            let next = &pows[k - 1] * g2;
            pows.push(next);
        }
    }
    let mut acc = frame.clone();
    for j in (0..=f.nx).rev() {
        acc = &acc * &h;
        acc.c[0] += f.get(j, 0);
        if use_y {
            for k in 1..=f.ny {
                let a = f.get(j, k);
                if a == S::zero() {
                    continue;
                }
                for (dst, &src) in acc.c.iter_mut().zip(&pows[k].c) {
                    *dst += a * src;
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C128;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample(nx: usize, ny: usize, center: C64) -> Series2 {
        let mut s = Series2::zeros(nx, ny, center, 0.5, 0.4);
        for j in 0..=nx {
            for k in 0..=ny {
                let v = c(((j * 7 + k * 3) % 5) as f64 - 2.0, ((j + 2 * k) % 3) as f64 - 1.0);
                s.set(j, k, v * 0.4f64.powi((j + k) as i32));
            }
        }
        s
    }

    #[test]
    fn eval_and_jet_agree() {
        let f = sample(8, 5, c(0.2, -0.1));
        let (x, y) = (c(0.4, 0.1), c(-0.1, 0.2));
        let j = f.eval_jet(&Jet::var_s(x, 2), &Jet::var_t(y, 2));
        assert!((j.value() - f.eval(x, y)).norm() < 1e-14);
        assert!((j.coef(1, 0) - f.partial_x().eval(x, y)).norm() < 1e-13);
        assert!((j.coef(0, 1) - f.partial_y().eval(x, y)).norm() < 1e-13);
    }

    #[test]
    fn partial_y_matches_finite_differences() {
        let f = sample(10, 6, c(0.0, 0.3));
        let dfy = f.partial_y();
        let h = 1e-6;
        for i in 0..5 {
            let x = c(0.1 * i as f64, 0.25);
            let y = c(-0.1 + 0.05 * i as f64, 0.02);
            let fd = (f.eval(x, y + h) - f.eval(x, y - h)) / (2.0 * h);
            let exact = dfy.eval(x, y);
            assert!((fd - exact).norm() <= 1e-8 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn reciprocal_times_self_is_one() {
        let f = sample(6, 4, c(0.0, 0.0)).add_const(c(3.0, 0.0));
        let p = &f * &f.recip();
        let mut one = p.like();
        one.set(0, 0, c(1.0, 0.0));
        assert!((&p - &one).majorant() < 1e-13);
    }

    #[test]
    fn extended_precision_compose() {
        let f: Series2<C128> = sample(6, 3, c(0.1, 0.0)).convert();
        let g1: Series2<C128> = Series2::var_x(6, 3, c(0.1, 0.0), 0.2, 0.2).add_const(C128::from_f64(0.01));
        let g2: Series2<C128> = Series2::var_y(6, 3, c(0.1, 0.0), 0.2, 0.2);
        let h = compose2(&f, &g1, &g2).unwrap();
        let x = C128::from_f64(0.15);
        let y = C128::from_f64(-0.05);
        let want = f.eval(x + C128::from_f64(0.01), y);
        assert!((h.eval(x, y) - want).modulus() < 1e-30);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn compose_matches_pointwise(a in -0.2f64..0.2, b in -0.2f64..0.2, th in 0.0f64..6.28) {
            let f = sample(7, 4, c(0.0, 0.0));
            let base = Series2::<C64>::var_x(12, 6, c(0.0, 0.0), 0.3, 0.3);
            let yv = Series2::<C64>::var_y(12, 6, c(0.0, 0.0), 0.3, 0.3);
            // g1 = a + 0.5 x + b y + 0.2 x y, g2 = 0.3 y + 0.1 x^2
            let g1 = &(&base.scale(c(0.5, 0.0)) + &yv.scale(c(b, 0.0))).add_const(c(a, 0.0)) + &(&base * &yv).scale(c(0.2, 0.0));
            let g2 = &yv.scale(c(0.3, 0.0)) + &(&base * &base).scale(c(0.1, 0.0));
            let h = compose2(&f, &g1, &g2).unwrap();
            let x = c(0.2 * th.cos(), 0.2 * th.sin());
            let y = c(-0.1 * th.sin(), 0.15);
            let want = f.eval(g1.eval(x, y), g2.eval(x, y));
            prop_assert!((h.eval(x, y) - want).norm() < 1e-10);
        }
    }
}
