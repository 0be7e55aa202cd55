use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Mul, Sub};

use super::DEFAULT_DOMAIN_SLACK;

/// A truncated series `sum_{k<=N} a_k (x - center)^k` on the disc of `radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series1 {
    coeffs: Vec<C64>,
    center: C64,
    radius: f64,
    /// Radius of the disc on which the series may be evaluated by
    /// compositions; equals `radius` unless the series is known to be entire.
    validity: f64,
}

#[derive(Serialize, Deserialize)]
struct Series1Json {
    coeffs: Vec<[f64; 2]>,
    center: [f64; 2],
    radius: f64,
    degree: usize,
}

impl Serialize for Series1 {
    fn serialize<Se: Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        Series1Json {
            coeffs: self.coeffs.iter().map(|z| [z.re, z.im]).collect(),
            center: [self.center.re, self.center.im],
            radius: self.radius,
            degree: self.degree(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Series1 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = Series1Json::deserialize(d)?;
        if j.coeffs.len() != j.degree + 1 {
            return Err(serde::de::Error::custom("coefficient count does not match degree"));
        }
        let coeffs = j.coeffs.iter().map(|p| C64::new(p[0], p[1])).collect();
        Series1::new(coeffs, C64::new(j.center[0], j.center[1]), j.radius)
            .map_err(serde::de::Error::custom)
    }
}

impl Series1 {
    pub fn new(coeffs: Vec<C64>, center: C64, radius: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation("series needs at least one coefficient".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Validation(format!("series radius must be positive, got {radius}")));
        }
        if !center.is_finite() || coeffs.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("series coefficients".into()));
        }
        Ok(Series1 { coeffs, center, radius, validity: radius })
    }

    pub(crate) fn from_parts(coeffs: Vec<C64>, center: C64, radius: f64) -> Self {
        Series1 { coeffs, center, radius, validity: radius }
    }

    pub fn zero(degree: usize, center: C64, radius: f64) -> Self {
        Series1 { coeffs: vec![C64::new(0.0, 0.0); degree + 1], center, radius, validity: radius }
    }

    pub fn constant(v: C64, degree: usize, center: C64, radius: f64) -> Self {
        let mut s = Series1::zero(degree, center, radius);
        s.coeffs[0] = v;
        s
    }

    /// The identity map `x`, expanded about `center`.
    pub fn identity(degree: usize, center: C64, radius: f64) -> Self {
        let mut s = Series1::constant(center, degree, center, radius);
        if degree >= 1 {
            s.coeffs[1] = C64::new(1.0, 0.0);
        }
        s
    }

    /// Re-expand the polynomial `sum p_k x^k` about `center`.
    pub fn from_poly(p: &[C64], degree: usize, center: C64, radius: f64) -> Self {
        let id = Series1::identity(degree, center, radius);
        let mut acc = Series1::zero(degree, center, radius);
        for &pk in p.iter().rev() {
            acc = &acc * &id;
            acc.coeffs[0] += pk;
        }
        acc
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Series1 { radius, validity: radius, ..self.clone() }
    }

    /// Mark the series as valid on a larger disc (for polynomials).
    pub fn with_validity(&self, validity: f64) -> Self {
        Series1 { validity, ..self.clone() }
    }

    pub fn validity(&self) -> f64 {
        self.validity
    }

    /// Index of the highest non-zero coefficient.
    pub fn effective_degree(&self) -> usize {
        self.coeffs.iter().rposition(|z| *z != C64::new(0.0, 0.0)).unwrap_or(0)
    }

    /// Truncate or zero-pad to `degree`.
    pub fn resized(&self, degree: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(degree + 1, C64::new(0.0, 0.0));
        Series1 { coeffs: c, ..*self }
    }

    pub fn eval(&self, x: C64) -> C64 {
        let h = x - self.center;
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * h + a)
    }

    pub fn eval_jet(&self, x: &Jet<C64>) -> Jet<C64> {
        let h = x.add_scalar(-self.center);
        let mut acc = Jet::constant(C64::new(0.0, 0.0), x.order());
        for &a in self.coeffs.iter().rev() {
            acc = (&acc * &h).add_scalar(a);
        }
        acc
    }

    /// Derivative series, kept at the same degree with a zero top coefficient.
    pub fn deriv(&self) -> Self {
        let n = self.degree();
        let mut c = vec![C64::new(0.0, 0.0); n + 1];
        for k in 1..=n {
            c[k - 1] = self.coeffs[k] * k as f64;
        }
        Series1 { coeffs: c, ..*self }
    }

    pub fn deriv_eval(&self, x: C64) -> C64 {
        let h = x - self.center;
        let n = self.degree();
        let mut acc = C64::new(0.0, 0.0);
        for k in (1..=n).rev() {
            acc = acc * h + self.coeffs[k] * k as f64;
        }
        acc
    }

    pub fn scale(&self, a: C64) -> Self {
        Series1 { coeffs: self.coeffs.iter().map(|&z| z * a).collect(), ..*self }
    }

    pub fn add_const(&self, a: C64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += a;
        s
    }

    /// Majorant `sum |a_k| r^k`, an upper bound for the sup on the disc.
    pub fn majorant(&self) -> f64 {
        let mut rk = 1.0;
        let mut acc = 0.0;
        for a in &self.coeffs {
            acc += a.norm() * rk;
            rk *= self.radius;
        }
        acc
    }

    /// Bound on `sup |self(x) - point|` over the disc.
    pub fn reach_from(&self, point: C64) -> f64 {
        let mut rk = self.radius;
        let mut acc = (self.coeffs[0] - point).norm();
        for a in &self.coeffs[1..] {
            acc += a.norm() * rk;
            rk *= self.radius;
        }
        acc
    }

    /// Majorant of the tail of degree `>= from`.
    pub fn tail_majorant(&self, from: usize) -> f64 {
        let r = self.radius;
        self.coeffs.iter().enumerate().skip(from).map(|(k, a)| a.norm() * r.powi(k as i32)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.is_finite())
    }

    /// Reciprocal series; requires a non-zero constant term.
    pub fn recip(&self) -> Self {
        let n = self.degree();
        let a = &self.coeffs;
        let inv0 = C64::new(1.0, 0.0) / a[0];
        let mut b = vec![C64::new(0.0, 0.0); n + 1];
        b[0] = inv0;
        for m in 1..=n {
            let mut s = C64::new(0.0, 0.0);
            for k in 1..=m {
                s += a[k] * b[m - k];
            }
            b[m] = -s * inv0;
        }
        Series1 { coeffs: b, ..*self }
    }

    pub fn div(&self, other: &Series1) -> Self {
        self * &other.recip()
    }
}

fn same_frame(a: &Series1, b: &Series1) {
    debug_assert!(a.center == b.center, "series centred at different points");
}

impl Add for &Series1 {
    type Output = Series1;
    fn add(self, o: &Series1) -> Series1 {
        same_frame(self, o);
        let n = self.degree().max(o.degree());
        let z = C64::new(0.0, 0.0);
        let c = (0..=n)
            .map(|k| *self.coeffs.get(k).unwrap_or(&z) + *o.coeffs.get(k).unwrap_or(&z))
            .collect();
        Series1 { coeffs: c, ..*self }
    }
}

impl Sub for &Series1 {
    type Output = Series1;
    fn sub(self, o: &Series1) -> Series1 {
        same_frame(self, o);
        let n = self.degree().max(o.degree());
        let z = C64::new(0.0, 0.0);
        let c = (0..=n)
            .map(|k| *self.coeffs.get(k).unwrap_or(&z) - *o.coeffs.get(k).unwrap_or(&z))
            .collect();
        Series1 { coeffs: c, ..*self }
    }
}

impl Mul for &Series1 {
    type Output = Series1;
    /// Product truncated at the left operand's degree.
    fn mul(self, o: &Series1) -> Series1 {
        same_frame(self, o);
        let n = self.degree();
        let mut c = vec![C64::new(0.0, 0.0); n + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate().take(n + 1 - i) {
                c[i + j] += a * b;
            }
        }
        Series1 { coeffs: c, ..*self }
    }
}

/// Truncated composition `f o g` with the default domain slack.
pub fn compose1(f: &Series1, g: &Series1) -> Result<Series1> {
    compose1_with_slack(f, g, DEFAULT_DOMAIN_SLACK)
}

/// Truncated composition `f o g`, expanded in `g`'s frame at `f`'s degree.
///
/// Fails with `DomainEscape` when the majorant of `g - f.center` exceeds
/// `f.validity * (1 + slack)`.
pub fn compose1_with_slack(f: &Series1, g: &Series1, slack: f64) -> Result<Series1> {
    let reach = g.reach_from(f.center);
    if !(reach <= f.validity * (1.0 + slack)) {
        return Err(Error::DomainEscape { reach, radius: f.validity });
    }
    Ok(compose_unchecked(f, g))
}

pub(crate) fn compose_unchecked(f: &Series1, g: &Series1) -> Series1 {
    let n = f.degree();
    let mut h = g.resized(n);
    h.coeffs[0] -= f.center;
    let mut acc = Series1::zero(n, g.center, g.radius);
    for &a in f.coeffs.iter().rev() {
        acc = &acc * &h;
        acc.coeffs[0] += a;
    }
    // A composition of entire polynomials that fits in the degree is exact.
    let exact = f.validity.is_infinite()
        && g.validity.is_infinite()
        && f.effective_degree() * g.effective_degree() <= n;
    acc.validity = if exact { f64::INFINITY } else { g.radius };
    acc
}

/// Local inverse of `f` near `center`, expanded about `f(center)`.
///
/// The output disc has radius `|f'(center)| * f.radius / 2`.
pub fn revert_about(f: &Series1, center: C64) -> Result<Series1> {
    let d = f.deriv_eval(center).norm();
    revert_about_with_radius(f, center, 0.5 * d * f.radius)
}

/// Local inverse of `f` near `center` on a disc of the given radius about
/// `f(center)`, computed by Newton's method on series.
pub fn revert_about_with_radius(f: &Series1, center: C64, radius: f64) -> Result<Series1> {
    let d = f.deriv_eval(center);
    if d.norm() <= 1e-10 {
        return Err(Error::CriticalCenter { modulus: d.norm() });
    }
    let w0 = f.eval(center);
    let n = f.degree();
    let mut g = Series1::zero(n, w0, radius);
    g.coeffs[0] = center;
    if n >= 1 {
        g.coeffs[1] = C64::new(1.0, 0.0) / d;
    }
    let fp = f.deriv();
    let id = Series1::identity(n, w0, radius);
    let scale = f.majorant().max(1.0);
    let mut last = f64::INFINITY;
    for it in 0..60 {
        let r = &compose_unchecked(f, &g) - &id;
        let corr = r.div(&compose_unchecked(&fp, &g));
        g = &g - &corr;
        let size = corr.majorant();
        if !size.is_finite() {
            return Err(Error::NoConvergence { iters: it + 1, residual: size });
        }
        if size < 1e-15 * scale || (it > 6 && size >= last) {
            break;
        }
        last = size;
    }
    let res = (&compose_unchecked(f, &g) - &id).majorant();
    if !(res < 1e-9 * scale) {
        return Err(Error::NoConvergence { iters: 60, residual: res });
    }
    Ok(g)
}
