//! Renormalization arcs, Siegel boundaries, average Jacobians, universality
//! and Hölder measurements.
//!
//! Everything here works through [`PairDynamics`]: the level-0 pair `Σ`
//! together with the charts `Φ^n_0` of its renormalizations. Two
//! implementations are provided. [`HenonDynamics`] uses the Hénon tower,
//! where every pre-iterate is an iterate of the map. [`SeriesDynamics`]
//! uses a series pair and the operator `𝐑`.
//!
//! Arc samples: the J-word `ω` of level `n` gives `Σ^ω(Φ^n_0(1, 0))` and the
//! I-word `γ` gives `Σ^γ(Φ^n_0(0, 0))`, where `Σ^w = pA_0^{α_0}∘…∘pA_{n−1}^{α_{n−1}}`.
//! Each sample is tagged with the left endpoint of its partition interval.

use crate::error::{Error, Result};
use crate::goldenrot::{fibonacci_q, theta, word_interval, words, Word, WordKind};
use crate::jet::Jet;
use crate::renorm1d::{mu_star, siegel_c, Pair1D};
use crate::renorm2d::{renormalize2d_traced, HenonMap, HenonTower, Microscope, Pair2D, Point};
use crate::scalar::C64;
use crate::series::Series1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A pair together with the charts of its renormalizations.
pub trait PairDynamics: Sync {
    fn apply_a(&self, z: Point) -> Result<Point>;
    fn apply_b(&self, z: Point) -> Result<Point>;
    fn jac_a(&self, z: Point) -> Result<C64>;
    fn jac_b(&self, z: Point) -> Result<C64>;
    /// `Φ^n_0(z)`: a point of the level-`n` chart in level-0 coordinates.
    fn chart(&self, level: usize, z: Point) -> Result<Point>;
    /// `e_n(x) = ∂_y b_n(x, 0)` of the level-`n` renormalization.
    fn e_n(&self, level: usize, x: C64) -> Result<C64>;

    /// `pA_k(z)` by nested application of `A` and `B`.
    fn pre_a(&self, k: usize, z: Point) -> Result<Point> {
        if k == 0 {
            return self.apply_a(z);
        }
        let z = self.pre_a(k - 1, z)?;
        let z = self.pre_a(k - 1, z)?;
        self.pre_b(k - 1, z)
    }

    /// `pB_k(z)` by nested application of `A` and `B`.
    fn pre_b(&self, k: usize, z: Point) -> Result<Point> {
        if k == 0 {
            return self.apply_b(z);
        }
        let z = self.pre_a(k - 1, z)?;
        self.pre_b(k - 1, z)
    }

    /// `pB_k(z)` with `(ln|Jac|, arg Jac mod 2π)` accumulated along the way.
    fn pre_b_logjac(&self, k: usize, z: Point) -> Result<(Point, f64, f64)> {
        fn rec<D: PairDynamics + ?Sized>(d: &D, a: bool, k: usize, z: Point, acc: &mut (f64, f64)) -> Result<Point> {
            if k == 0 {
                let j = if a { d.jac_a(z)? } else { d.jac_b(z)? };
                if !(j.norm() >= 1e-300) {
                    return Err(Error::ZeroJacobian { modulus: j.norm() });
                }
                acc.0 += j.norm().ln();
                acc.1 = wrap(acc.1 + j.arg());
                return if a { d.apply_a(z) } else { d.apply_b(z) };
            }
            let mut z = rec(d, true, k - 1, z, acc)?;
            if a {
                z = rec(d, true, k - 1, z, acc)?;
            }
            rec(d, false, k - 1, z, acc)
        }
        let mut acc = (0.0, 0.0);
        let out = rec(self, false, k, z, &mut acc)?;
        Ok((out, acc.0, acc.1))
    }

    /// `Σ^w(z) = pA_0^{α_0}∘…∘pA_{n−1}^{α_{n−1}}(z)`.
    fn word_apply(&self, w: &Word, mut z: Point) -> Result<Point> {
        for k in (0..w.level()).rev() {
            for _ in 0..w.digit(k) {
                z = self.pre_a(k, z)?;
            }
        }
        Ok(z)
    }
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Hénon pairs, through the renormalization tower in rescaled coordinates.
#[derive(Debug, Clone)]
pub struct HenonDynamics {
    pub tower: HenonTower,
}

impl HenonDynamics {
    pub fn new(hm: HenonMap, max_level: usize) -> Result<Self> {
        Ok(HenonDynamics { tower: HenonTower::new(hm, max_level)? })
    }

    fn iterate(&self, z: Point, n: u64) -> Point {
        self.tower.hm.scaled::<C64>().iterate(z.0, z.1, n)
    }

    /// `Jac B_n(x, y)` without cancellation: `b^{qb} ∂_Pχ(ΨBz) / ∂_Pχ(Ψz)`.
    pub fn level_jacobian_b(&self, level: usize, z: Point) -> Result<C64> {
        let prm = self.tower.params(level)?;
        let map = self.tower.hm.scaled::<C64>();
        let w = self.tower.chart(level, z)?;
        let dchi = |p: Point| map.iterate_tangent([p.0, p.1, ONE, ZERO], prm.qb - 1)[2];
        let d0 = dchi(w);
        let d1 = dchi(map.iterate(w.0, w.1, prm.qb));
        if d0.norm() < 1e-300 {
            return Err(Error::SingularJacobian);
        }
        Ok(map.b.powu(prm.qb as u32) * d1 / d0)
    }
}

impl PairDynamics for HenonDynamics {
    fn apply_a(&self, z: Point) -> Result<Point> {
        Ok(self.iterate(z, 2))
    }

    fn apply_b(&self, z: Point) -> Result<Point> {
        Ok(self.iterate(z, 1))
    }

    fn jac_a(&self, z: Point) -> Result<C64> {
        Ok(jet_jacobian(|x, y| {
            let m = self.tower.hm.scaled::<C64>();
            m.iterate_jet(x, y, 2)
        }, z))
    }

    fn jac_b(&self, z: Point) -> Result<C64> {
        Ok(jet_jacobian(|x, y| {
            let m = self.tower.hm.scaled::<C64>();
            m.iterate_jet(x, y, 1)
        }, z))
    }

    fn chart(&self, level: usize, z: Point) -> Result<Point> {
        if z == (ONE, ZERO) || z == (ZERO, ZERO) {
            let (zb, wb) = self.tower.base_points(level)?;
            return Ok(if z.0 == ONE { zb } else { wb });
        }
        self.tower.chart(level, z)
    }

    fn e_n(&self, level: usize, x: C64) -> Result<C64> {
        Ok(-self.level_jacobian_b(level, (x, ZERO))?)
    }

    fn pre_a(&self, k: usize, z: Point) -> Result<Point> {
        Ok(self.iterate(z, fibonacci_q(2 * k + 2)?))
    }

    fn pre_b(&self, k: usize, z: Point) -> Result<Point> {
        Ok(self.iterate(z, fibonacci_q(2 * k + 1)?))
    }

    fn pre_b_logjac(&self, k: usize, z: Point) -> Result<(Point, f64, f64)> {
        let q = fibonacci_q(2 * k + 1)? as f64;
        let b = self.tower.hm.b;
        if b.norm() == 0.0 {
            return Err(Error::ZeroJacobian { modulus: 0.0 });
        }
        Ok((self.pre_b(k, z)?, q * b.norm().ln(), wrap(q * b.arg())))
    }

    fn word_apply(&self, w: &Word, z: Point) -> Result<Point> {
        Ok(self.iterate(z, w.henon_count()))
    }
}

fn jet_jacobian(f: impl Fn(Jet<C64>, Jet<C64>) -> (Jet<C64>, Jet<C64>), (x, y): Point) -> C64 {
    let (u, v) = f(Jet::var_s(x, 1), Jet::var_t(y, 1));
    u.coef(1, 0) * v.coef(0, 1) - u.coef(0, 1) * v.coef(1, 0)
}

/// A series pair with the charts of its operator renormalizations.
#[derive(Debug, Clone)]
pub struct SeriesDynamics {
    /// `Σ, 𝐑Σ, 𝐑²Σ, …`
    pub iterates: Vec<Pair2D>,
    microscope: Microscope,
}

impl SeriesDynamics {
    pub fn new(pair: Pair2D, max_level: usize) -> Result<Self> {
        let microscope = Microscope::from_operator(&pair, 0, max_level)?;
        let mut iterates = vec![pair];
        for _ in 0..max_level {
            let next = renormalize2d_traced(iterates.last().unwrap())?.0;
            iterates.push(next);
        }
        Ok(SeriesDynamics { iterates, microscope })
    }

    fn base(&self) -> &Pair2D {
        &self.iterates[0]
    }
}

impl PairDynamics for SeriesDynamics {
    fn apply_a(&self, (x, y): Point) -> Result<Point> {
        Ok(self.base().apply_a(x, y))
    }

    fn apply_b(&self, (x, y): Point) -> Result<Point> {
        Ok(self.base().apply_b(x, y))
    }

    fn jac_a(&self, (x, y): Point) -> Result<C64> {
        Ok(self.base().jacobians(x, y).0)
    }

    fn jac_b(&self, (x, y): Point) -> Result<C64> {
        Ok(self.base().jacobians(x, y).1)
    }

    fn chart(&self, level: usize, z: Point) -> Result<Point> {
        if level > self.microscope.len() {
            return Err(Error::LevelBudget { level, max: self.microscope.len() });
        }
        self.microscope.stages[..level].iter().rev().try_fold(z, |z, s| s.apply(z))
    }

    fn e_n(&self, level: usize, x: C64) -> Result<C64> {
        let p = self.iterates.get(level).ok_or(Error::LevelBudget { level, max: self.iterates.len() - 1 })?;
        Ok(p.bfun.partial_y().eval(x, ZERO))
    }
}

/// Iterate counts `(|pB_k|, |pA_k|)` for `k = 0..=n`, from
/// `pA_{k+1} = pB_k∘pA_k²` and `pB_{k+1} = pB_k∘pA_k` with `(1, 2)` at `k = 0`.
pub fn pre_iterate_counts(n: usize) -> Vec<(u64, u64)> {
    let mut out = vec![(1u64, 2u64)];
    for _ in 0..n {
        let (b, a) = *out.last().unwrap();
        out.push((b + a, b + 2 * a));
    }
    out
}

/// One point of the renormalization arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSample {
    pub t: f64,
    pub point: Point,
    pub word: Word,
    pub level: usize,
}

/// Arc samples for all words of `level`, sorted by `t`.
pub fn arc_points<D: PairDynamics>(d: &D, level: usize) -> Result<Vec<ArcSample>> {
    let zj = d.chart(level, (ONE, ZERO))?;
    let wi = d.chart(level, (ZERO, ZERO))?;
    let mut all = words(level, WordKind::J)?;
    all.extend(words(level, WordKind::I)?);
    let mut out = all
        .par_iter()
        .map(|w| {
            let base = if w.kind() == WordKind::J { zj } else { wi };
            let point = d.word_apply(w, base)?;
            if !(point.0.norm().is_finite() && point.1.norm().is_finite()) {
                return Err(Error::NonFinite(format!("arc sample {w}")));
            }
            Ok(ArcSample { t: word_interval(w).0, point, word: *w, level })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

fn dist(p: Point, q: Point) -> f64 {
    ((p.0 - q.0).norm_sqr() + (p.1 - q.1).norm_sqr()).sqrt()
}

/// Largest distance between consecutive samples.
pub fn max_gap(points: &[Point]) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).fold(0.0, f64::max)
}

/// `s(γ) ∪ H(s(γ))` in original Hénon coordinates, for arc samples `γ` of a Hénon map.
pub fn boundary_from_arc(hm: &HenonMap, arc: &[Point]) -> Vec<Point> {
    let s: Vec<Point> = arc.iter().map(|&z| hm.to_physical(z)).collect();
    let hs: Vec<Point> = s.iter().map(|&z| hm.apply(z)).collect();
    s.into_iter().chain(hs).collect()
}

/// Approximation of the Siegel boundary of `hm` from the level-`level` arc.
pub fn siegel_boundary(hm: &HenonMap, level: usize) -> Result<Vec<Point>> {
    let d = HenonDynamics::new(*hm, level)?;
    let arc: Vec<Point> = arc_points(&d, level)?.iter().map(|s| s.point).collect();
    Ok(boundary_from_arc(hm, &arc))
}

/// Invariance of a boundary cloud: the largest distance from `H(p)` to the
/// cloud, and the largest gap between consecutive points of each half.
pub fn boundary_invariance(hm: &HenonMap, cloud: &[Point]) -> (f64, f64) {
    let half = cloud.len() / 2;
    let gap = max_gap(&cloud[..half]).max(max_gap(&cloud[half..]));
    let defect = cloud
        .par_iter()
        .map(|&p| {
            let hp = hm.apply(p);
            cloud.iter().map(|&q| dist(hp, q)).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    (defect, gap)
}

/// The arc of the degenerate map `ν = 0` from a one-dimensional computation:
/// with `f(x) = c* x² + 1`, the base point `P` solves `f^{q−1}(P) = 0` and the
/// samples are `(f^N(P), f^{N−1}(P))`. Returned in rescaled coordinates,
/// in the same order as [`arc_points`].
pub fn degenerate_arc(level: usize) -> Result<Vec<ArcSample>> {
    let cs = siegel_c(mu_star(), ZERO);
    let f = |x: C64| cs * x * x + 1.0;
    let qb = fibonacci_q(2 * level + 1)?;
    // pull 0 back along the orbit of the critical value 1, then polish
    let mut path = vec![ONE];
    for _ in 1..qb {
        let x = *path.last().unwrap();
        path.push(f(x));
    }
    let mut p = ZERO;
    for &x in path[..qb as usize - 1].iter().rev() {
        let r = ((p - 1.0) / cs).sqrt();
        p = if (r - x).norm() <= (-r - x).norm() { r } else { -r };
    }
    let mut res = f64::NAN;
    for _ in 0..8 {
        let (mut x, mut dx) = (p, ONE);
        for _ in 0..qb - 1 {
            dx = 2.0 * cs * x * dx;
            x = f(x);
        }
        res = x.norm();
        if dx.norm() == 0.0 || res < 1e-15 {
            break;
        }
        p -= x / dx;
    }
    if !(res < 1e-9) {
        return Err(Error::NoConvergence { iters: 8, residual: res });
    }
    let orbit = |n: u64| -> Point {
        if n == 0 {
            return (p, ZERO);
        }
        let mut prev = p;
        let mut x = f(p);
        for _ in 1..n {
            prev = x;
            x = f(x);
        }
        (x, prev)
    };
    let mut all = words(level, WordKind::J)?;
    all.extend(words(level, WordKind::I)?);
    let mut out: Vec<ArcSample> = all
        .iter()
        .map(|w| {
            let n = w.henon_count() + if w.kind() == WordKind::J { qb } else { 0 };
            ArcSample { t: word_interval(w).0, point: orbit(n), word: *w, level }
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

/// Average Jacobian and its per-level scaling data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianProfile {
    pub avg_jacobian: C64,
    pub per_level: Vec<JacobianLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianLevel {
    pub n: usize,
    pub q2n: u64,
    pub jac_at_witness: C64,
    pub c_n_estimate: C64,
    /// `|Jac pB_n(z₁) / Jac pB_n(z₂) − 1|` across the bead.
    pub distortion: f64,
}

/// `b_Σ = exp((1/(1+θ)) ∫ τ dt)`: `τ = log Jac A` on `(0, 1]`, `log Jac B`
/// on `[−θ, 0]`, left-endpoint quadrature over the level-`level` partition.
/// The logarithm is continued from its principal value at `t → 0⁺`.
pub fn average_jacobian<D: PairDynamics>(d: &D, level: usize) -> Result<JacobianProfile> {
    let arc = arc_points(d, level)?;
    let th = theta();
    let mut rows = Vec::with_capacity(arc.len());
    for (i, s) in arc.iter().enumerate() {
        let right = arc.get(i + 1).map_or(1.0, |n| n.t);
        let (l, r) = (s.t, right);
        let wa = (r - l.max(0.0)).max(0.0);
        let wb = (r.min(0.0) - l).max(0.0);
        let ja = if wa > 0.0 { Some(d.jac_a(s.point)?) } else { None };
        let jb = if wb > 0.0 { Some(d.jac_b(s.point)?) } else { None };
        for j in [ja, jb].into_iter().flatten() {
            if !(j.norm() >= 1e-300) {
                return Err(Error::ZeroJacobian { modulus: j.norm() });
            }
        }
        rows.push((l, wa, ja, wb, jb));
    }
    // continuous branch: walk right from the first sample with t ≥ 0, then left
    let start = rows.iter().position(|r| r.2.is_some() && r.0 >= 0.0).or_else(|| rows.iter().position(|r| r.2.is_some()));
    let mut integral = ZERO;
    let unwrap = |prev: f64, z: C64| {
        let a = z.arg();
        a + 2.0 * PI * ((prev - a) / (2.0 * PI)).round()
    };
    if let Some(s0) = start {
        let j0 = rows[s0].2.unwrap();
        let mut prev = j0.arg();
        for r in &rows[s0..] {
            for (w, j) in [(r.1, r.2), (r.3, r.4)] {
                if let Some(j) = j {
                    prev = unwrap(prev, j);
                    integral += C64::new(j.norm().ln(), prev) * w;
                }
            }
        }
        let mut prev = j0.arg();
        for r in rows[..s0].iter().rev() {
            for (w, j) in [(r.1, r.2), (r.3, r.4)] {
                if let Some(j) = j {
                    prev = unwrap(prev, j);
                    integral += C64::new(j.norm().ln(), prev) * w;
                }
            }
        }
    } else {
        let mut prev: Option<f64> = None;
        for r in rows.iter().rev() {
            if let Some(j) = r.4 {
                let a = prev.map_or(j.arg(), |p| unwrap(p, j));
                prev = Some(a);
                integral += C64::new(j.norm().ln(), a) * r.3;
            }
        }
    }
    Ok(JacobianProfile { avg_jacobian: (integral / (1.0 + th)).exp(), per_level: Vec::new() })
}

/// `c_n = log Jac pB_n(w) − q_{2n} log b_Σ` at the witness `w` (the sample
/// of the interval `I_n`), with the imaginary part reduced to `(−π, π]`.
pub fn jacobian_scaling_check<D: PairDynamics>(
    d: &D,
    profile: &mut JacobianProfile,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<()> {
    let lb = profile.avg_jacobian;
    profile.per_level.clear();
    for n in levels {
        let w = d.chart(n, (ZERO, ZERO))?;
        let (_, lj, aj) = d.pre_b_logjac(n, w)?;
        let w2 = d.chart(n, (C64::new(0.2, 0.0), ZERO))?;
        let (_, lj2, aj2) = d.pre_b_logjac(n, w2)?;
        let q2n = fibonacci_q(2 * n)?;
        let c = C64::new(lj - q2n as f64 * lb.norm().ln(), wrap(aj - q2n as f64 * lb.arg()));
        let ratio = C64::from_polar((lj - lj2).exp(), aj - aj2);
        profile.per_level.push(JacobianLevel {
            n,
            q2n,
            jac_at_witness: C64::from_polar(lj.exp(), aj),
            c_n_estimate: c,
            distortion: (ratio - 1.0).norm(),
        });
    }
    Ok(())
}

/// The universal function `α(x) = u*'(x − 1) / u*'(ξ*(x) − 1)` built from the
/// 1D fixed point; `u*` linearizes `𝐠*(w) = η*⁻¹(λ*(w + 1)) − 1` at 0.
#[derive(Debug, Clone)]
pub struct UniversalAlpha {
    zstar: Pair1D,
    lambda: C64,
    u: Series1,
    u_radius: f64,
}

impl UniversalAlpha {
    pub fn new(zstar: &Pair1D) -> Result<Self> {
        let u = crate::renorm1d::linearize_gstar(zstar)?;
        Ok(UniversalAlpha { zstar: zstar.clone(), lambda: zstar.lambda(), u_radius: 0.5 * u.radius(), u })
    }

    /// `𝐠*(w)` and its derivative, continuing the branch of `η*⁻¹` through
    /// `η*⁻¹(λ*) = 1` along the segment from 0 to `w`.
    fn g(&self, w: C64) -> Result<(C64, C64)> {
        let eta = &self.zstar.eta;
        let steps = (w.norm() / 0.02).ceil().max(1.0) as usize;
        let mut p = ONE;
        for s in 1..=steps {
            let target = self.lambda * (w * (s as f64 / steps as f64) + 1.0);
            let mut done = false;
            for _ in 0..40 {
                let d = eta.deriv_eval(p);
                if d.norm() < 1e-14 {
                    return Err(Error::CriticalCenter { modulus: d.norm() });
                }
                let step = (eta.eval(p) - target) / d;
                p -= step;
                if step.norm() < 1e-15 * (1.0 + p.norm()) {
                    done = true;
                    break;
                }
            }
            if !done {
                let r = (eta.eval(p) - target).norm();
                if !(r < 1e-13) {
                    return Err(Error::NoConvergence { iters: 40, residual: r });
                }
            }
        }
        Ok((p - 1.0, self.lambda / eta.deriv_eval(p)))
    }

    pub fn u_prime(&self, mut w: C64) -> Result<C64> {
        let lam2 = self.lambda * self.lambda;
        let mut acc = ONE;
        for _ in 0..200 {
            if w.norm() <= self.u_radius {
                return Ok(acc * self.u.deriv_eval(w));
            }
            let (gw, dg) = self.g(w)?;
            acc *= dg / lam2;
            w = gw;
        }
        Err(Error::NoConvergence { iters: 200, residual: w.norm() })
    }

    /// `ξ*(x)`, continued outside its disc by `ξ*(x) = λ⁻¹η*(ξ*(λx))`.
    pub fn xi(&self, x: C64) -> C64 {
        let xi = &self.zstar.xi;
        if (x - xi.center()).norm() <= xi.radius() || x.norm() < 1e-3 {
            return xi.eval(x);
        }
        self.zstar.eta.eval(self.xi(self.lambda * x)) / self.lambda
    }

    pub fn alpha(&self, x: C64) -> Result<C64> {
        Ok(self.u_prime(x - 1.0)? / self.u_prime(self.xi(x) - 1.0)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityLevel {
    pub n: usize,
    pub q2n: u64,
    pub e_n_at_grid: Vec<C64>,
    pub jac_witness: C64,
    pub alpha_hat: Vec<C64>,
    /// `sup |α̂_n − α|` on the grid.
    pub alpha_dev: f64,
    /// max/min of `|α̂_n|` on the grid.
    pub distortion: f64,
    pub below_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub grid: Vec<f64>,
    pub x0: f64,
    pub levels: Vec<UniversalityLevel>,
    /// Least-squares slope of `log|e_n(x₀)|` against `q_{2n}`.
    pub slope: f64,
    pub log_b_sigma: f64,
    /// Successive ratios of `alpha_dev`.
    pub dev_ratios: Vec<f64>,
}

/// Grid on `[0.3, 0.9]` used for `α̂`.
pub fn universality_grid() -> Vec<f64> {
    (0..=12).map(|i| 0.3 + 0.05 * i as f64).collect()
}

/// `α̂_n(x) = −e_n(x) / Jac pB_n(w_n)` against the universal `α`, and the
/// growth of `e_n(x₀)` against `q_{2n}`.
pub fn universality_report<D: PairDynamics>(
    d: &D,
    levels: std::ops::RangeInclusive<usize>,
    b_sigma: C64,
    alpha: &UniversalAlpha,
) -> Result<UniversalityReport> {
    let grid = universality_grid();
    let x0 = 0.5;
    let target: Vec<C64> = grid.iter().map(|&x| alpha.alpha(C64::new(x, 0.0))).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut fit = Vec::new();
    for n in levels {
        let w = d.chart(n, (ZERO, ZERO))?;
        let (_, lj, aj) = d.pre_b_logjac(n, w)?;
        let jw = C64::from_polar(lj.exp(), aj);
        let e: Vec<C64> = grid.iter().map(|&x| d.e_n(n, C64::new(x, 0.0))).collect::<Result<_>>()?;
        let e0 = d.e_n(n, C64::new(x0, 0.0))?;
        let below = e0.norm() < 1e-300 || jw.norm() < 1e-300;
        let ah: Vec<C64> = e.iter().map(|&v| -v / jw).collect();
        let dev = ah.iter().zip(&target).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let mods: Vec<f64> = ah.iter().map(|z| z.norm()).collect();
        let mx = mods.iter().cloned().fold(0.0, f64::max);
        let mn = mods.iter().cloned().fold(f64::INFINITY, f64::min);
        let q2n = fibonacci_q(2 * n)?;
        if !below {
            fit.push((q2n as f64, e0.norm().ln()));
        }
        out.push(UniversalityLevel {
            n,
            q2n,
            e_n_at_grid: e,
            jac_witness: jw,
            alpha_hat: ah,
            alpha_dev: dev,
            distortion: mx / mn,
            below_noise: below,
        });
    }
    let slope = least_squares_slope(&fit);
    let dev_ratios = out.windows(2).map(|w| w[1].alpha_dev / w[0].alpha_dev).collect();
    Ok(UniversalityReport { grid, x0, levels: out, slope, log_b_sigma: b_sigma.norm().ln(), dev_ratios })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `½(1 + ln|b₁| / ln|b₂|)`.
pub fn holder_bound(b1: C64, b2: C64) -> Result<f64> {
    for b in [b1, b2] {
        let m = b.norm();
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::InvalidJacobian(format!("|b| = {m} must lie in (0, 1)")));
        }
    }
    Ok(0.5 * (1.0 + b1.norm().ln() / b2.norm().ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub alpha_hat: f64,
    pub bound: f64,
    /// The bound is below 1 and therefore restricts the exponent.
    pub binding: bool,
    pub within_bound: bool,
    pub pairs_used: usize,
}

/// Empirical Hölder exponent of the word-matched map from the second arc to
/// the first: the 5th percentile of `log Δ / log Δ̃` over sample pairs with
/// both distances below 0.5.
pub fn holder_exponent(arc1: &[ArcSample], arc2: &[ArcSample]) -> Result<(f64, usize)> {
    if arc1.len() != arc2.len() || arc1.iter().zip(arc2).any(|(a, b)| a.word != b.word) {
        return Err(Error::Validation("arcs must be sampled on the same words".into()));
    }
    let n = arc1.len();
    let mut ratios: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).filter_map(move |j| {
                let d1 = dist(arc1[i].point, arc1[j].point);
                let d2 = dist(arc2[i].point, arc2[j].point);
                (d1 > 0.0 && d2 > 0.0 && d1 < 0.5 && d2 < 0.5).then(|| d1.ln() / d2.ln())
            })
        })
        .collect();
    if ratios.is_empty() {
        return Err(Error::Validation("no sample pairs below the distance cut".into()));
    }
    ratios.sort_by(|a, b| a.total_cmp(b));
    let k = ((ratios.len() as f64) * 0.05).floor() as usize;
    Ok((ratios[k.min(ratios.len() - 1)], ratios.len()))
}

/// Compare two pairs' arcs at `level` against the bound from their average Jacobians.
pub fn holder_empirical<D1: PairDynamics, D2: PairDynamics>(
    d1: &D1,
    d2: &D2,
    b1: C64,
    b2: C64,
    level: usize,
) -> Result<HolderReport> {
    let bound = holder_bound(b1, b2)?;
    let (alpha_hat, used) = holder_exponent(&arc_points(d1, level)?, &arc_points(d2, level)?)?;
    let binding = bound < 1.0;
    Ok(HolderReport { alpha_hat, bound, binding, within_bound: alpha_hat <= bound + 0.1, pairs_used: used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goldenrot::{count_words, partition};
    use crate::renorm1d::{solve_fixed_point, NewtonConfig};
    use crate::renorm2d::{embed_1d, Frames2};

    /// Forwards only the required methods, so that pre-iterates and words
    /// are evaluated by nested application.
    struct Nested<'a, D>(&'a D);

    impl<D: PairDynamics> PairDynamics for Nested<'_, D> {
        fn apply_a(&self, z: Point) -> Result<Point> {
            self.0.apply_a(z)
        }
        fn apply_b(&self, z: Point) -> Result<Point> {
            self.0.apply_b(z)
        }
        fn jac_a(&self, z: Point) -> Result<C64> {
            self.0.jac_a(z)
        }
        fn jac_b(&self, z: Point) -> Result<C64> {
            self.0.jac_b(z)
        }
        fn chart(&self, l: usize, z: Point) -> Result<Point> {
            self.0.chart(l, z)
        }
        fn e_n(&self, l: usize, x: C64) -> Result<C64> {
            self.0.e_n(l, x)
        }
    }

    /// `φ⁻¹∘Σ∘φ` with `φ(x, y) = (x + ε x², y)`: a commuting pair with
    /// non-constant Jacobians.
    struct Conjugated {
        inner: HenonDynamics,
        eps: f64,
    }

    impl Conjugated {
        fn phi(&self, (x, y): Point) -> Point {
            (x + self.eps * x * x, y)
        }
        fn phi_inv(&self, (u, y): Point) -> Point {
            let e = self.eps;
            (((1.0 + 4.0 * e * u).sqrt() - 1.0) / (2.0 * e), y)
        }
        fn jphi(&self, z: Point) -> C64 {
            1.0 + 2.0 * self.eps * z.0
        }
    }

    impl PairDynamics for Conjugated {
        fn apply_a(&self, z: Point) -> Result<Point> {
            Ok(self.phi_inv(self.inner.apply_a(self.phi(z))?))
        }
        fn apply_b(&self, z: Point) -> Result<Point> {
            Ok(self.phi_inv(self.inner.apply_b(self.phi(z))?))
        }
        fn jac_a(&self, z: Point) -> Result<C64> {
            Ok(self.inner.jac_a(self.phi(z))? * self.jphi(z) / self.jphi(self.apply_a(z)?))
        }
        fn jac_b(&self, z: Point) -> Result<C64> {
            Ok(self.inner.jac_b(self.phi(z))? * self.jphi(z) / self.jphi(self.apply_b(z)?))
        }
        fn chart(&self, l: usize, z: Point) -> Result<Point> {
            Ok(self.phi_inv(self.inner.chart(l, z)?))
        }
        fn e_n(&self, l: usize, x: C64) -> Result<C64> {
            self.inner.e_n(l, x)
        }
    }

    fn golden(nu: f64, level: usize) -> HenonDynamics {
        HenonDynamics::new(HenonMap::golden(nu).unwrap(), level).unwrap()
    }

    #[test]
    fn holder_bound_values() {
        let c = |x: f64| C64::new(x, 0.0);
        assert_eq!(holder_bound(c(0.3), C64::from_polar(0.3, 1.0)).unwrap(), 1.0);
        assert!((holder_bound(c(0.1), c(0.01)).unwrap() - 0.75).abs() < 1e-15);
        assert!((holder_bound(c(0.01), c(0.1)).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(holder_bound(c(1.0), c(0.1)), Err(Error::InvalidJacobian(_))));
        assert!(matches!(holder_bound(c(0.0), c(0.1)), Err(Error::InvalidJacobian(_))));
    }

    #[test]
    fn pre_iterate_counts_are_fibonacci() {
        let c = pre_iterate_counts(3);
        assert_eq!(c, vec![(1, 2), (3, 5), (8, 13), (21, 34)]);
        for (k, &(b, a)) in c.iter().enumerate() {
            assert_eq!((b, a), (fibonacci_q(2 * k + 1).unwrap(), fibonacci_q(2 * k + 2).unwrap()));
        }
    }

    #[test]
    fn nested_pre_iterates_match_henon_iterates() {
        let nu = 0.2;
        let d = golden(nu, 3);
        let g = Nested(&d);
        let z = (C64::new(0.3, 0.1), C64::new(0.05, 0.0));
        for k in 0..4 {
            assert!(dist(g.pre_a(k, z).unwrap(), d.pre_a(k, z).unwrap()) < 1e-10);
            assert!(dist(g.pre_b(k, z).unwrap(), d.pre_b(k, z).unwrap()) < 1e-10);
        }
        // Jac pB_2 = (μν)^8
        let (_, lj, aj) = g.pre_b_logjac(2, z).unwrap();
        let want = d.tower.hm.b.powu(8);
        let got = C64::from_polar(lj.exp(), aj);
        assert!((got - want).norm() < 1e-12 * want.norm(), "{got} {want}");
    }

    #[test]
    fn spread_identity_and_empty_word() {
        let d = golden(0.3, 4);
        let g = Nested(&d);
        let z = (C64::new(0.9, 0.05), C64::new(0.02, -0.01));
        for n in 1..=4 {
            let w = Word::omega_max(n);
            assert_eq!(w.henon_count() + 1, fibonacci_q(2 * n + 2).unwrap());
            let lhs = g.apply_b(g.word_apply(&w, z).unwrap()).unwrap();
            let rhs = g.pre_a(n, z).unwrap();
            assert!(dist(lhs, rhs) < 1e-9 * (1.0 + rhs.0.norm()), "n = {n}");
        }
        let empty = words(0, WordKind::J).unwrap()[0];
        assert_eq!(g.word_apply(&empty, z).unwrap(), z);
    }

    #[test]
    fn sample_counts_follow_fibonacci() {
        let d = golden(0.1, 5);
        for level in 0..=5 {
            let arc = arc_points(&d, level).unwrap();
            let want = count_words(level, WordKind::J) + count_words(level, WordKind::I);
            assert_eq!(arc.len() as u64, want);
            assert_eq!(arc.len() as u64, fibonacci_q(2 * level + 1).unwrap() + fibonacci_q(2 * level).unwrap());
            let part = partition(level).unwrap();
            for (s, iv) in arc.iter().zip(&part.intervals) {
                assert_eq!(s.t, iv.left);
                assert_eq!(s.word, iv.word);
            }
        }
        assert_eq!(arc_points(&d, 3).unwrap().len(), 34);
    }

    #[test]
    fn moves_of_the_rotation_model_are_realized_by_a() {
        let d = golden(0.3, 5);
        let g = Nested(&d);
        for level in 2..=5 {
            let arc = arc_points(&d, level).unwrap();
            let mut checked = 0;
            for s in arc.iter().filter(|s| s.word.kind() == WordKind::J) {
                let mut digits = s.word.digits();
                *digits.last_mut().unwrap() += 1;
                let Ok(next) = Word::from_digits(&digits, WordKind::J) else { continue };
                let target = arc.iter().find(|r| r.word == next).unwrap();
                assert!((target.t - (s.t - theta())).abs() < 1e-12);
                let moved = g.apply_a(s.point).unwrap();
                assert!(dist(moved, target.point) < 1e-9 * (1.0 + moved.0.norm()));
                checked += 1;
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn arcs_refine_consistently() {
        let d = golden(0.2, 6);
        let mut prev = arc_points(&d, 2).unwrap();
        for level in 3..=6 {
            let arc = arc_points(&d, level).unwrap();
            let pts: Vec<Point> = prev.iter().map(|s| s.point).collect();
            let gap = max_gap(&pts);
            for s in &arc {
                let parent = prev.iter().rev().find(|p| p.t <= s.t + 1e-12).unwrap();
                assert!(dist(parent.point, s.point) <= 2.0 * gap, "level {level}");
            }
            prev = arc;
        }
    }

    #[test]
    fn henon_level_jacobian_matches_finite_differences() {
        let d = golden(0.2, 2);
        let t = &d.tower;
        let map = t.hm.scaled::<C64>();
        let qb = t.params(2).unwrap().qb;
        let b2 = |z: Point| {
            let w = t.chart(2, z).unwrap();
            t.chart_inverse(2, map.iterate(w.0, w.1, qb)).unwrap().0
        };
        let p = t.pair(2, &Frames2::tower()).unwrap();
        for x in [0.3, 0.5, 0.8] {
            let z = (C64::new(x, 0.0), ZERO);
            let h = 1e-5;
            let by = (b2((z.0, C64::new(h, 0.0))) - b2((z.0, C64::new(-h, 0.0)))) / (2.0 * h);
            let e = d.e_n(2, z.0).unwrap();
            assert!((e - by).norm() < 1e-4 * by.norm(), "{e} {by}");
            if x <= 0.5 {
                assert!((e + p.jacobians(z.0, z.1).1).norm() < 1e-6 * e.norm());
            }
        }
    }

    #[test]
    fn average_jacobian_of_constant_jacobian_pairs() {
        struct Lin(C64);
        impl PairDynamics for Lin {
            fn apply_a(&self, z: Point) -> Result<Point> {
                Ok((z.0 - 0.1, z.1 * self.0))
            }
            fn apply_b(&self, z: Point) -> Result<Point> {
                Ok((z.0 + 0.2, z.1 * self.0))
            }
            fn jac_a(&self, _: Point) -> Result<C64> {
                Ok(self.0)
            }
            fn jac_b(&self, _: Point) -> Result<C64> {
                Ok(self.0)
            }
            fn chart(&self, _: usize, z: Point) -> Result<Point> {
                Ok(z)
            }
            fn e_n(&self, _: usize, _: C64) -> Result<C64> {
                Ok(ZERO)
            }
        }
        for j in [C64::from_polar(0.3, 2.0), C64::from_polar(0.05, -3.0)] {
            let p = average_jacobian(&Lin(j), 3).unwrap();
            assert!((p.avg_jacobian - j).norm() < 1e-12 * j.norm());
        }
        let hm = HenonMap::golden(0.2).unwrap();
        let d = HenonDynamics::new(hm, 7).unwrap();
        let b4 = average_jacobian(&d, 4).unwrap().avg_jacobian;
        let b7 = average_jacobian(&d, 7).unwrap().avg_jacobian;
        let want = hm.b.powf(1.0 + theta());
        assert!((b4 - b7).norm() < 1e-10 * want.norm());
        assert!((b7 - want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn scaling_constants_are_bounded() {
        let hm = HenonMap::golden(0.3).unwrap();
        let d = HenonDynamics::new(hm, 3).unwrap();
        let mut p = average_jacobian(&d, 3).unwrap();
        jacobian_scaling_check(&d, &mut p, 1..=3).unwrap();
        let cap = 2.0 * hm.b.norm().ln().abs();
        for l in &p.per_level {
            assert!(l.c_n_estimate.norm() <= cap);
            assert_eq!(l.distortion, 0.0);
            let coef = l.q2n as f64 * -theta() + fibonacci_q(2 * l.n + 1).unwrap() as f64 - l.q2n as f64;
            let want = coef * hm.b.norm().ln();
            assert!((l.c_n_estimate.re - want).abs() < 1e-9);
        }
    }

    #[test]
    fn distortion_of_a_non_constant_jacobian_pair_decays() {
        let c = Conjugated { inner: golden(0.2, 5), eps: 0.15 };
        let mut p = JacobianProfile { avg_jacobian: c.inner.tower.hm.b, per_level: Vec::new() };
        jacobian_scaling_check(&Nested(&c), &mut p, 1..=5).unwrap();
        let d: Vec<f64> = p.per_level.iter().map(|l| l.distortion).collect();
        assert!(d[0] > 1e-4);
        for w in d.windows(2) {
            assert!(w[1] < 0.8 * w[0], "{d:?}");
        }
    }

    #[test]
    fn degenerate_pairs() {
        let fp = solve_fixed_point(60, &NewtonConfig::default()).unwrap();
        let s = embed_1d(&fp.zstar, &Frames2::default()).unwrap();
        let d = SeriesDynamics::new(s, 2).unwrap();
        assert!(matches!(average_jacobian(&d, 2), Err(Error::ZeroJacobian { .. })));
        let z = (C64::new(0.3, 0.0), C64::new(0.01, 0.0));
        let z2 = (z.0, z.1 + 1e-6);
        let w = words(2, WordKind::J).unwrap()[2];
        let (p, q) = (d.word_apply(&w, z).unwrap(), d.word_apply(&w, z2).unwrap());
        assert!((p.1 - q.1).norm() < 1e-12);
        let arc = arc_points(&d, 2).unwrap();
        let (a, used) = holder_exponent(&arc, &arc).unwrap();
        assert!(used > 0 && (a - 1.0).abs() < 1e-12);
        let h = golden(0.3, 3);
        let r = holder_empirical(&h, &h, h.tower.hm.b, h.tower.hm.b, 3).unwrap();
        assert!((r.alpha_hat - 1.0).abs() < 1e-12 && !r.binding);
    }

    #[test]
    fn degenerate_henon_arc_is_one_dimensional() {
        let d = golden(0.0, 4);
        for level in [2, 4] {
            let a = arc_points(&d, level).unwrap();
            let b = degenerate_arc(level).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert_eq!(p.word, q.word);
                assert!(dist(p.point, q.point) < 1e-10);
            }
        }
        let hm = HenonMap::golden(0.0).unwrap();
        let cloud = siegel_boundary(&hm, 4).unwrap();
        assert_eq!(cloud.len(), 2 * 89);
        let (defect, gap) = boundary_invariance(&hm, &cloud);
        assert!(defect <= 3.0 * gap);
    }

    #[test]
    fn alpha_oracle_is_normalized() {
        let fp = solve_fixed_point(60, &NewtonConfig::default()).unwrap();
        let al = UniversalAlpha::new(&fp.zstar).unwrap();
        assert!((al.u_prime(ZERO).unwrap() - 1.0).norm() < 1e-10);
        // u*(𝐠*(w)) = λ² u*(w) differentiated: u*'(𝐠*(w)) 𝐠*'(w) = λ² u*'(w)
        let w = C64::new(-0.05, 0.01);
        let (gw, dg) = al.g(w).unwrap();
        let lhs = al.u_prime(gw).unwrap() * dg;
        let rhs = al.lambda * al.lambda * al.u_prime(w).unwrap();
        assert!((lhs - rhs).norm() < 1e-8 * rhs.norm());
        for x in [0.3, 0.6, 0.9] {
            let a = al.alpha(C64::new(x, 0.0)).unwrap();
            assert!(a.norm() > 0.1 && a.norm() < 10.0);
        }
    }
}
