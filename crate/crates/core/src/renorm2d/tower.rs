use super::map::{HenonMap, ScaledMap};
use super::pair::{Frames2, Pair2D, Point};
use super::EXTENDED_THRESHOLD;
use crate::error::{Error, Result};
use crate::goldenrot::fibonacci_q;
use crate::jet::Jet;
use crate::scalar::{Precision, Scalar, C128, C64};
use crate::series::Series2;
use rayon::prelude::*;

/// Chart data of renormalization level `m`.
///
/// With `χ = π₁B₀^{qb−1}` the chart is
/// `Ψ(x, y) = (χ⁻¹_{λy+c}(λx + c), λy + c)`, and the level-`m` pair is
/// `Ψ⁻¹∘(B₀^{qa}, B₀^{qb})∘Ψ` with `qa = q_{2m+2}`, `qb = q_{2m+1}`.
/// `p` is the first coordinate of `Ψ(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams<S> {
    pub level: usize,
    pub qa: u64,
    pub qb: u64,
    pub c: S,
    pub lambda: S,
    pub p: S,
}

impl<S: Scalar> LevelParams<S> {
    /// Level 0: the identity chart.
    pub fn base() -> Self {
        LevelParams { level: 0, qa: 2, qb: 1, c: S::zero(), lambda: S::one(), p: S::zero() }
    }

    pub fn convert<T: Scalar>(&self) -> LevelParams<T> {
        LevelParams {
            level: self.level,
            qa: self.qa,
            qb: self.qb,
            c: T::from_c64(self.c.to_c64()),
            lambda: T::from_c64(self.lambda.to_c64()),
            p: T::from_c64(self.p.to_c64()),
        }
    }
}

fn jet_size<S: Scalar>(j: &Jet<S>) -> f64 {
    let k = j.order();
    let mut m = 0.0f64;
    for i in 0..=k {
        for l in 0..=(k - i) {
            m = m.max(j.coef(i, l).modulus());
        }
    }
    m
}

/// Newton iteration bookkeeping: stop at roundoff or on stagnation.
struct Converge {
    tol: f64,
    prev: f64,
}

impl Converge {
    fn new<S: Scalar>() -> Self {
        Converge { tol: 1e3 * S::EPS, prev: f64::INFINITY }
    }

    /// `Some(true)` when done, `Some(false)` to continue, `None` on failure.
    fn update(&mut self, step: f64, scale: f64, iter: usize) -> Option<bool> {
        if !step.is_finite() {
            return None;
        }
        let rel = step / (1.0 + scale);
        let done = rel <= self.tol || (iter > 6 && rel < 1e-6 && step >= 0.5 * self.prev);
        self.prev = step;
        Some(done)
    }
}

/// Solve `χ(P, y) = x` for the jet `P`, where `χ = π₁B₀^n`.
pub(crate) fn chi_inverse_jet<S: Scalar>(
    map: &ScaledMap<S>,
    x: &Jet<S>,
    y: &Jet<S>,
    seed: S,
    n: u64,
) -> Result<Jet<S>> {
    if n == 0 {
        return Ok(x.clone());
    }
    let eval = |p: &Jet<S>| {
        let [u, _, du, _] = map.iterate_jet_tangent(p.clone(), y.clone(), n);
        let r = &u - x;
        let ok = r.value().modulus().is_finite() && du.value().modulus().is_finite();
        (r, du, ok)
    };
    let mut p = Jet::constant(seed, x.order());
    let (mut r, mut du, ok) = eval(&p);
    if !ok {
        return Err(Error::CriticalCenter { modulus: f64::NAN });
    }
    let mut conv = Converge::new::<S>();
    for it in 0..100 {
        let d0 = du.value().modulus();
        if !(d0 > 1e-300) {
            return Err(Error::CriticalCenter { modulus: d0 });
        }
        let full = r.div(&du);
        // backtrack while the orbit escapes or the residual grows
        let res0 = r.value().modulus();
        let mut step = full;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &p - &step;
            let (r1, du1, ok) = eval(&trial);
            if ok && r1.value().modulus() <= 2.0 * res0 + 1e3 * S::EPS {
                p = trial;
                r = r1;
                du = du1;
                accepted = true;
                break;
            }
            step = step.scale(S::from_f64(0.5));
        }
        if !accepted {
            return Err(Error::NoConvergence { iters: it, residual: res0 });
        }
        match conv.update(jet_size(&step), p.value().modulus(), it) {
            None => return Err(Error::NoConvergence { iters: it, residual: f64::NAN }),
            Some(true) => return Ok(p),
            Some(false) => {}
        }
    }
    Err(Error::NoConvergence { iters: 100, residual: conv.prev })
}

/// Solve for the chart data of level `m ≥ 1` by Newton's method from `(c0, p0)`.
pub(crate) fn level_newton<S: Scalar>(map: &ScaledMap<S>, m: usize, c0: S, p0: S) -> Result<LevelParams<S>> {
    if m == 0 {
        return Ok(LevelParams::base());
    }
    let qa = fibonacci_q(2 * m + 2)?;
    let qb = fibonacci_q(2 * m + 1)?;
    let (mut c, mut p) = (c0, p0);
    let mut conv = Converge::new::<S>();
    let mut done = false;
    for it in 0..60 {
        let xs = Jet::var_s(c, 2);
        let yt = Jet::var_t(c, 2);
        let pj = chi_inverse_jet(map, &xs, &yt, p, qb - 1)?;
        p = pj.value();
        let (u, v) = map.iterate_jet(pj, yt, qa + qb);
        let (g, _) = map.iterate_jet(u, v, qb - 1);
        let f = g.coef(1, 0);
        let fp = g.coef(2, 0).scale(2.0) + g.coef(1, 1);
        if !(fp.modulus() > 1e-300) {
            return Err(Error::NoCriticalPoint);
        }
        let dc = f / fp;
        c -= dc;
        match conv.update(dc.modulus(), c.modulus(), it) {
            None => return Err(Error::NoConvergence { iters: it, residual: f64::NAN }),
            Some(true) => {
                done = true;
                break;
            }
            Some(false) => {}
        }
    }
    if !done {
        return Err(Error::NoConvergence { iters: 60, residual: conv.prev });
    }
    let pc = chi_inverse_jet(map, &Jet::constant(c, 0), &Jet::constant(c, 0), p, qb - 1)?.value();
    let (x, _) = map.iterate(pc, c, 2 * qb - 1);
    let lambda = x - c;
    if !(lambda.modulus() > 1e-300) {
        return Err(Error::ZeroScaling { modulus: lambda.modulus() });
    }
    Ok(LevelParams { level: m, qa, qb, c, lambda, p: pc })
}

/// Level data by continuation in `ν` from the degenerate map `ν = 0`.
fn solve_level<S: Scalar>(hm: &HenonMap, m: usize) -> Result<LevelParams<S>> {
    if m == 0 {
        return Ok(LevelParams::base());
    }
    let zero = C64::new(0.0, 0.0);
    let start = HenonMap::new(hm.mu, zero)?;
    let mut cur = level_newton(&start.scaled::<S>(), m, S::zero(), S::one())?;
    if hm.nu == zero {
        return Ok(cur);
    }
    let (mut t, mut dt) = (0.0f64, 0.01f64);
    // secant predictor from the last accepted step
    let mut slope: Option<(S, S)> = None;
    while t < 1.0 {
        let t1 = (t + dt).min(1.0);
        let h = S::from_f64(t1 - t);
        let (c0, p0) = match slope {
            Some((sc, sp)) => (cur.c + sc * h, cur.p + sp * h),
            None => (cur.c, cur.p),
        };
        let ht = HenonMap::new(hm.mu, hm.nu * t1)?;
        let trial = level_newton(&ht.scaled::<S>(), m, c0, p0);
        match trial {
            Ok(next)
                if (next.c - c0).modulus() <= 0.25 * cur.lambda.modulus() && (next.p - p0).modulus() <= 0.1 =>
            {
                slope = Some(((next.c - cur.c) / h, (next.p - cur.p) / h));
                cur = next;
                t = t1;
                dt = (dt * 1.5).min(0.05);
            }
            _ => {
                dt *= 0.5;
                if dt < 1e-7 {
                    return Err(Error::NoConvergence { iters: m, residual: t });
                }
            }
        }
    }
    Ok(cur)
}

/// Solve `χ(P, y) = x` pointwise by continuation from the chart origin.
fn chart_point_from<S: Scalar>(map: &ScaledMap<S>, prm: &LevelParams<S>, x: S, y: S) -> Result<(S, S)> {
    let yy = prm.lambda * y + prm.c;
    let n = prm.qb - 1;
    if n == 0 {
        return Ok((prm.lambda * x + prm.c, yy));
    }
    let steps = 16;
    let mut p = prm.p;
    for j in 1..=steps {
        let s = S::from_f64(j as f64 / steps as f64);
        let xt = prm.lambda * (x * s) + prm.c;
        let yt = prm.lambda * (y * s) + prm.c;
        p = chi_inverse_jet(map, &Jet::constant(xt, 0), &Jet::constant(yt, 0), p, n)?.value();
    }
    Ok((p, yy))
}

/// Series `φ` on a chart disc with `χ(φ, Y) = λx + c` and `Y = λy + c`.
fn chart_series<S: Scalar>(
    map: &ScaledMap<S>,
    prm: &LevelParams<S>,
    frame: &Series2<S>,
) -> Result<(Series2<S>, Series2<S>, Series2<S>)> {
    let (nx, ny) = frame.degrees();
    let (rx, ry) = frame.radii();
    let center = frame.center();
    let xs = Series2::<S>::var_x(nx, ny, center, rx, ry);
    let ys = Series2::<S>::var_y(nx, ny, center, rx, ry);
    let target = xs.scale(prm.lambda).add_const(prm.c);
    let yy = ys.scale(prm.lambda).add_const(prm.c);
    let n = prm.qb - 1;
    if n == 0 {
        let one = frame.like().add_const(S::one());
        return Ok((target, yy, one));
    }
    let seed = chart_point_from(map, prm, S::from_c64(center), S::zero())?.0;
    let mut phi = frame.like().add_const(seed);
    let mut conv = Converge::new::<S>();
    for it in 0..60 {
        let [u, _, du, _] = map.iterate_series_tangent(phi.clone(), yy.clone(), n);
        let step = (&u - &target).div(&du);
        phi = &phi - &step;
        match conv.update(step.majorant(), phi.majorant(), it) {
            None => return Err(Error::NoConvergence { iters: it, residual: f64::NAN }),
            Some(true) => {
                let du = map.iterate_series_tangent(phi.clone(), yy.clone(), n)[2].clone();
                return Ok((phi, yy, du));
            }
            Some(false) => {}
        }
    }
    Err(Error::NoConvergence { iters: 60, residual: conv.prev })
}

fn pow_u64<S: Scalar>(mut base: S, mut n: u64) -> S {
    let mut acc = S::one();
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        n >>= 1;
    }
    acc
}

/// Iterate `(φ, Y)` and return `(x_n, ∂_y x_n)` at each stop `n ≥ qb − 1`.
///
/// The chart's y-direction lies in the kernel of `dχ`, so after `qb − 1`
/// steps it is exactly `(0, w)` with `w = b^{qb−1} λ / ∂_Pχ`. Propagating
/// that vector forward avoids the cancellation of the direct derivative.
fn stable_orbit<S: Scalar>(
    map: &ScaledMap<S>,
    prm: &LevelParams<S>,
    phi: Series2<S>,
    yy: Series2<S>,
    du: &Series2<S>,
    stops: &[u64],
) -> Vec<(Series2<S>, Series2<S>)> {
    let n0 = prm.qb - 1;
    let (mut x, mut y) = map.iterate_series(phi, yy, n0, |_, _| {});
    let w = du.recip().scale(pow_u64(map.b, n0) * prm.lambda);
    let (mut t1, mut t2) = (x.like(), w);
    let mut out = Vec::with_capacity(stops.len());
    let mut k = n0;
    for &stop in stops {
        while k < stop {
            let nx = (&x.square().scale(map.c) - &y.scale(map.b)).add_const(S::one());
            let nt = &(&x * &t1).scale(map.c.scale(2.0)) - &t2.scale(map.b);
            y = x;
            x = nx;
            t2 = t1;
            t1 = nt;
            k += 1;
        }
        out.push((x.clone(), t1.clone()));
    }
    out
}

/// Replace the y-dependent coefficients of `f` by the antiderivative of `dy`.
fn with_y_part<S: Scalar>(f: &Series2<S>, dy: &Series2<S>) -> Series2<S> {
    let (nx, ny) = f.degrees();
    let mut g = f.clone();
    for j in 0..=nx {
        for k in 1..=ny {
            g.set(j, k, dy.get(j, k - 1).scale(1.0 / k as f64));
        }
    }
    g
}

/// Renormalizations of a Hénon map built directly from iterates of `B₀`.
#[derive(Debug, Clone)]
pub struct HenonTower {
    pub hm: HenonMap,
    levels: Vec<LevelParams<C64>>,
}

impl HenonTower {
    /// Solve the chart data for levels `0..=max_level` (in parallel).
    pub fn new(hm: HenonMap, max_level: usize) -> Result<Self> {
        if max_level > 12 {
            return Err(Error::LevelBudget { level: max_level, max: 12 });
        }
        let levels = (0..=max_level).into_par_iter().map(|m| solve_level::<C64>(&hm, m)).collect::<Result<Vec<_>>>()?;
        Ok(HenonTower { hm, levels })
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn params(&self, m: usize) -> Result<&LevelParams<C64>> {
        self.levels.get(m).ok_or(Error::LevelBudget { level: m, max: self.max_level() })
    }

    /// Level data re-solved in extended precision from the double values.
    pub fn params_extended(&self, m: usize) -> Result<LevelParams<C128>> {
        let p = self.params(m)?.convert::<C128>();
        level_newton(&self.hm.scaled::<C128>(), m, p.c, p.p)
    }

    /// The level pair `Σ_m` as series in precision `S`.
    pub fn level_pair<S: Scalar>(hm: &HenonMap, prm: &LevelParams<S>, frames: &Frames2) -> Result<Pair2D<S>> {
        let map = hm.scaled::<S>();
        let inv = S::one() / prm.lambda;
        let out = |x: &Series2<S>| x.add_const(-prm.c).scale(inv);
        let (phi, yy, du) = chart_series(&map, prm, &frames.zeros_z::<S>())?;
        let mut zs = stable_orbit(&map, prm, phi, yy, &du, &[prm.qa - 1, prm.qa + prm.qb - 1]);
        let (x2, d2) = zs.pop().unwrap();
        let (x1, d1) = zs.pop().unwrap();
        let h = with_y_part(&out(&x1), &d1.scale(inv));
        let a = with_y_part(&out(&x2), &d2.scale(inv));
        let (phi, yy, du) = chart_series(&map, prm, &frames.zeros_w::<S>())?;
        let (x3, d3) = stable_orbit(&map, prm, phi, yy, &du, &[2 * prm.qb - 1]).pop().unwrap();
        let b = with_y_part(&out(&x3), &d3.scale(inv));
        let pair = Pair2D::new(a, h, b)?;
        if !pair.is_finite() {
            return Err(Error::NonFinite(format!("tower level {}", prm.level)));
        }
        Ok(pair)
    }

    pub fn pair(&self, m: usize, frames: &Frames2) -> Result<Pair2D> {
        Self::level_pair(&self.hm, self.params(m)?, frames)
    }

    pub fn pair_extended(&self, m: usize, frames: &Frames2) -> Result<Pair2D<C128>> {
        Self::level_pair(&self.hm, &self.params_extended(m)?, frames)
    }

    /// The level pair with automatic escalation: levels `m ≥ 4` with
    /// `|ν| ≤ 0.2` are recomputed in extended precision once `‖Σ‖_y` falls
    /// below [`EXTENDED_THRESHOLD`]. Returns the precision used.
    pub fn pair_auto(&self, m: usize, frames: &Frames2, precision: Precision) -> Result<(Pair2D, Precision)> {
        if precision == Precision::Double {
            let p = self.pair(m, frames)?;
            let small = m >= 4 && self.hm.nu.norm() <= 0.2 && self.hm.nu.norm() > 0.0;
            if !(small && p.y_norm() < EXTENDED_THRESHOLD) {
                return Ok((p, Precision::Double));
            }
        }
        Ok((self.pair_extended(m, frames)?.convert::<C64>(), Precision::Extended))
    }

    /// `Ψ_m(x, y)` in rescaled Hénon coordinates.
    pub fn chart(&self, m: usize, (x, y): Point) -> Result<Point> {
        chart_point_from(&self.hm.scaled::<C64>(), self.params(m)?, x, y)
    }

    /// `Ψ_m` on jets, seeded by the pointwise solution.
    pub fn chart_jet<S: Scalar>(&self, prm: &LevelParams<S>, x: &Jet<S>, y: &Jet<S>) -> Result<(Jet<S>, Jet<S>)> {
        let map = self.hm.scaled::<S>();
        let (p0, _) = chart_point_from(&map, prm, x.value(), y.value())?;
        let yy = y.scale(prm.lambda).add_scalar(prm.c);
        let xx = x.scale(prm.lambda).add_scalar(prm.c);
        let p = chi_inverse_jet(&map, &xx, &yy, p0, prm.qb - 1)?;
        Ok((p, yy))
    }

    /// `Ψ_m⁻¹` of a point: `((χ(z) − c)/λ, (y − c)/λ)`.
    pub fn chart_inverse(&self, m: usize, (x, y): Point) -> Result<Point> {
        let prm = self.params(m)?;
        let (u, _) = self.hm.scaled::<C64>().iterate(x, y, prm.qb - 1);
        Ok(((u - prm.c) / prm.lambda, (y - prm.c) / prm.lambda))
    }

    /// Base points of the level-`m` beads in rescaled coordinates:
    /// `Ψ_m(1, 0)` for the `A`-bead and `Ψ_m(0, 0)` for the `B`-bead.
    pub fn base_points(&self, m: usize) -> Result<(Point, Point)> {
        let prm = self.params(m)?;
        let w = (prm.p, prm.c);
        let z = self.hm.scaled::<C64>().iterate(w.0, w.1, prm.qb);
        Ok((z, w))
    }
}
