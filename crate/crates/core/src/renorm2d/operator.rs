use super::pair::{Frames2, Pair2D, Point};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::renorm1d::{renormalize1d, Pair1D};
use crate::scalar::C64;
use crate::series::{compose2, Series1, Series2};
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
/// Branch anchor of the inverse `a_y⁻¹`.
const ANCHOR: C64 = ONE;
const DERIV_TOL: f64 = 1e-8;
const CRIT_TOL: f64 = 1e-13;
const CRIT_RADIUS: f64 = 0.3;

/// `ι(ζ) = Λ(A_ζ, B_ζ)` with `A_ζ = (η∘ξ∘η, η)`, `B_ζ = (η∘ξ, x)`.
///
/// The first coordinates are exactly the 1D renormalization `ℛ(ζ)`.
pub fn embed_1d(z: &Pair1D, frames: &Frames2) -> Result<Pair2D> {
    let r = renormalize1d(z)?;
    let lam = z.lambda();
    let lin = Series1::from_poly(&[ZERO, lam], z.degree(), z.eta.center(), z.eta.radius());
    let h = crate::series::compose1(&z.eta, &lin)?.scale(1.0 / lam);
    let lift = |s: &Series1| Series2::from_series1(s, frames.ny, frames.ry);
    Pair2D::new(lift(&r.eta), lift(&h), lift(&r.xi))
}

/// `π₁Σ`: the restriction `(a(x, 0), b(x, 0))` as a 1D pair.
pub fn restrict_1d(s: &Pair2D) -> Pair1D {
    Pair1D::new(s.a.series1_at_y0(), s.bfun.series1_at_y0())
}

/// Pre-renormalization `(A₁, B₁) = (B∘A², B∘A)`, evaluated as exact compositions.
#[derive(Debug, Clone)]
pub struct PreRenorm2D {
    pub sigma: Pair2D,
}

impl PreRenorm2D {
    pub fn apply_a1(&self, (x, y): Point) -> Point {
        let (u, v) = self.sigma.apply_a(x, y);
        let (u, v) = self.sigma.apply_a(u, v);
        self.sigma.apply_b(u, v)
    }

    pub fn apply_b1(&self, (x, y): Point) -> Point {
        let (u, v) = self.sigma.apply_a(x, y);
        self.sigma.apply_b(u, v)
    }

    pub fn apply_a1_jet(&self, x: &Jet<C64>, y: &Jet<C64>) -> (Jet<C64>, Jet<C64>) {
        let (u, v) = self.sigma.apply_a_jet(x, y);
        let (u, v) = self.sigma.apply_a_jet(&u, &v);
        self.sigma.apply_b_jet(&u, &v)
    }

    pub fn apply_b1_jet(&self, x: &Jet<C64>, y: &Jet<C64>) -> (Jet<C64>, Jet<C64>) {
        let (u, v) = self.sigma.apply_a_jet(x, y);
        self.sigma.apply_b_jet(&u, &v)
    }
}

pub fn prerenorm2d(s: &Pair2D) -> Result<PreRenorm2D> {
    if !s.is_finite() {
        return Err(Error::NonFinite("prerenorm2d input".into()));
    }
    Ok(PreRenorm2D { sigma: s.clone() })
}

/// Solve `a(P, Y) = X` for the jet `P` on the branch through `seed`.
pub(crate) fn inverse_branch_jet(a: &Series2, ax: &Series2, x: &Jet<C64>, y: &Jet<C64>, seed: C64) -> Result<Jet<C64>> {
    let k = x.order();
    let yv = Jet::constant(y.value(), 0);
    let mut p = seed;
    let mut ok = false;
    for _ in 0..60 {
        let pj = Jet::constant(p, 0);
        let d = ax.eval_jet(&pj, &yv).value();
        if d.norm() < DERIV_TOL {
            return Err(Error::CriticalCenter { modulus: d.norm() });
        }
        let step = (a.eval(p, y.value()) - x.value()) / d;
        p -= step;
        if !step.norm().is_finite() {
            break;
        }
        if step.norm() <= 1e-15 * (1.0 + p.norm()) {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::NoConvergence { iters: 60, residual: f64::NAN });
    }
    let mut pj = Jet::constant(p, k);
    for _ in 0..=k {
        let r = &a.eval_jet(&pj, y) - x;
        let d = ax.eval_jet(&pj, y);
        pj = &pj - &r.div(&d);
    }
    Ok(pj)
}

/// The pre-renormalization conjugated by `H(x, y) = (a_y⁻¹(x), y)`.
///
/// `B₂ = (a(b(x, h(φ, y)), x), x)` and `A₂ = (a(b(r₁, r₂), r₁), r₁)` with
/// `φ = a_y⁻¹(x)` and `(r₁, r₂) = A(x, h(φ, y))`.
#[derive(Debug, Clone)]
pub struct Straightened {
    pub pre: PreRenorm2D,
    ax: Series2,
}

impl Straightened {
    fn sigma(&self) -> &Pair2D {
        &self.pre.sigma
    }

    /// `H(x, y)` on jets.
    pub fn h_jet(&self, x: &Jet<C64>, y: &Jet<C64>) -> Result<(Jet<C64>, Jet<C64>)> {
        Ok((inverse_branch_jet(&self.sigma().a, &self.ax, x, y, ANCHOR)?, y.clone()))
    }

    pub fn h_map(&self, (x, y): Point) -> Result<Point> {
        let (p, _) = self.h_jet(&Jet::constant(x, 0), &Jet::constant(y, 0))?;
        Ok((p.value(), y))
    }

    pub fn h_inverse(&self, (x, y): Point) -> Point {
        (self.sigma().a.eval(x, y), y)
    }

    pub fn apply_a2_jet(&self, x: &Jet<C64>, y: &Jet<C64>) -> Result<(Jet<C64>, Jet<C64>)> {
        let (p, q) = self.h_jet(x, y)?;
        let (u, v) = self.pre.apply_a1_jet(&p, &q);
        Ok((self.sigma().a.eval_jet(&u, &v), v))
    }

    pub fn apply_b2_jet(&self, x: &Jet<C64>, y: &Jet<C64>) -> Result<(Jet<C64>, Jet<C64>)> {
        let (p, q) = self.h_jet(x, y)?;
        let (u, v) = self.pre.apply_b1_jet(&p, &q);
        Ok((self.sigma().a.eval_jet(&u, &v), v))
    }

    pub fn apply_a2(&self, (x, y): Point) -> Result<Point> {
        let (u, v) = self.apply_a2_jet(&Jet::constant(x, 0), &Jet::constant(y, 0))?;
        Ok((u.value(), v.value()))
    }

    pub fn apply_b2(&self, (x, y): Point) -> Result<Point> {
        let (u, v) = self.apply_b2_jet(&Jet::constant(x, 0), &Jet::constant(y, 0))?;
        Ok((u.value(), v.value()))
    }
}

pub fn straighten(pre: &PreRenorm2D) -> Result<Straightened> {
    let ax = pre.sigma.a.partial_x();
    let d = ax.eval(ANCHOR, ZERO).norm();
    if d < DERIV_TOL {
        return Err(Error::CriticalCenter { modulus: d });
    }
    Ok(Straightened { pre: pre.clone(), ax })
}

/// Series `φ` with `a(φ, λy + c) = λx + c` on the frame of `frame`.
fn branch_series(a: &Series2, ax: &Series2, frame: &Series2, c: C64, lam: C64) -> Result<(Series2, Series2)> {
    let (nx, ny) = frame.degrees();
    let (rx, ry) = frame.radii();
    let cen = frame.center();
    let t = Series2::var_x(nx, ny, cen, rx, ry).scale(lam).add_const(c);
    let wy = Series2::var_y(nx, ny, cen, rx, ry).scale(lam).add_const(c);
    let mut phi = frame.like().add_const(ANCHOR);
    let mut prev = f64::INFINITY;
    for it in 0..60 {
        let r = &compose2(a, &phi, &wy)? - &t;
        let d = compose2(ax, &phi, &wy)?;
        let step = r.div(&d);
        phi = &phi - &step;
        let s = step.majorant();
        if !s.is_finite() {
            return Err(Error::NonFinite("inverse branch series".into()));
        }
        if s < 1e-14 * (1.0 + phi.majorant()) || (it > 8 && s >= 0.5 * prev && s < 1e-9) {
            return Ok((phi, wy));
        }
        prev = s;
    }
    Err(Error::NoConvergence { iters: 60, residual: prev })
}

/// `𝐑̃(Σ)` before projection: the straightened pair, recentred at the
/// critical point `c_a` of `π₁B₂∘A₂` and rescaled by `λ`.
///
/// The recentring `T(x, y) = (λx + c_a, λy + c_a)` acts on both
/// coordinates so that `B` keeps the form `(b, x)`.
#[derive(Debug, Clone)]
pub struct Recentered {
    pub pair: Pair2D,
    pub c_a: C64,
    pub lambda: C64,
}

/// Critical point near 0 of `x ↦ π₁B₂∘A₂(x, 0)`.
fn critical_point(st: &Straightened) -> Result<C64> {
    let mut c = ZERO;
    for _ in 0..40 {
        let x = Jet::var_s(c, 2);
        let y = Jet::constant(ZERO, 2);
        let (u, v) = st.apply_a2_jet(&x, &y)?;
        let (g, _) = st.apply_b2_jet(&u, &v)?;
        let g2 = g.coef(2, 0) * 2.0;
        if g2.norm() < 1e-300 {
            return Err(Error::NoCriticalPoint);
        }
        let dc = g.coef(1, 0) / g2;
        c -= dc;
        if !(c.norm() <= CRIT_RADIUS) {
            return Err(Error::NoCriticalPoint);
        }
        if dc.norm() <= CRIT_TOL {
            return Ok(c);
        }
    }
    Err(Error::NoCriticalPoint)
}

pub fn recenter_rescale(st: &Straightened) -> Result<Recentered> {
    let c = critical_point(st)?;
    let s = st.sigma();
    let (a, h, b) = (&s.a, &s.h, &s.bfun);
    let p = st.h_map((c, c))?.0;
    let lam = a.eval(b.eval(c, h.eval(p, c)), c) - c;
    if !(lam.norm() >= 1e-12) {
        return Err(Error::ZeroScaling { modulus: lam.norm() });
    }
    let frames = s.frames();
    let inv = ONE / lam;

    let (phi_w, wy) = branch_series(a, &st.ax, &frames.zeros_w(), c, lam)?;
    let tw = Series2::var_x(frames.nx, frames.ny, frames.dom.c_w, frames.dom.r_w, frames.ry).scale(lam).add_const(c);
    let hp = compose2(h, &phi_w, &wy)?;
    let bb = compose2(b, &tw, &hp)?;
    let mut bn = compose2(a, &bb, &tw)?.add_const(-c).scale(inv);

    let (phi_z, wy) = branch_series(a, &st.ax, &frames.zeros_z(), c, lam)?;
    let tz = Series2::var_x(frames.nx, frames.ny, frames.dom.c_z, frames.dom.r_z, frames.ry).scale(lam).add_const(c);
    let q2 = compose2(h, &phi_z, &wy)?;
    let r1 = compose2(a, &tz, &q2)?;
    let r2 = compose2(h, &tz, &q2)?;
    let br = compose2(b, &r1, &r2)?;
    let an = compose2(a, &br, &r1)?.add_const(-c).scale(inv);
    let hn = r1.add_const(-c).scale(inv);

    // π₁B₃(0) = 1 holds up to truncation; impose it exactly.
    let off = ONE - bn.eval(ZERO, ZERO);
    bn = bn.add_const(off);
    let pair = Pair2D::new(an, hn, bn)?;
    if !pair.is_finite() {
        return Err(Error::NonFinite("recenter_rescale".into()));
    }
    Ok(Recentered { pair, c_a: c, lambda: lam })
}

/// The projected pair together with the corrections applied.
#[derive(Debug, Clone)]
pub struct Projected {
    pub pair: Pair2D,
    pub c_b: C64,
    pub correction_c: C64,
    pub correction_d: C64,
}

/// Rescale all three maps: `f ↦ s⁻¹ f(s x, s y)`.
fn rescale(p: &Pair2D, s: C64) -> Result<Pair2D> {
    let f = p.frames();
    let sub = |g: &Series2, frame: Series2| -> Result<Series2> {
        let (nx, ny) = frame.degrees();
        let (rx, ry) = frame.radii();
        let x = Series2::var_x(nx, ny, frame.center(), rx, ry).scale(s);
        let y = Series2::var_y(nx, ny, frame.center(), rx, ry).scale(s);
        Ok(compose2(g, &x, &y)?.scale(ONE / s))
    };
    Pair2D::new(sub(&p.a, f.zeros_z())?, sub(&p.h, f.zeros_z())?, sub(&p.bfun, f.zeros_w())?)
}

pub fn project_ac(rec: &Recentered) -> Result<Projected> {
    let mut pair = rec.pair.clone();
    // T_b: critical point of x ↦ a(b(x, 0), x)
    let mut cb = ZERO;
    let mut found = false;
    for _ in 0..40 {
        let x = Jet::var_s(cb, 2);
        let y = Jet::constant(ZERO, 2);
        let (u, v) = pair.apply_b_jet(&x, &y);
        let g = pair.a.eval_jet(&u, &v);
        let g2 = g.coef(2, 0) * 2.0;
        if g2.norm() < 1e-300 {
            return Err(Error::NoCriticalPoint);
        }
        let dc = g.coef(1, 0) / g2;
        cb -= dc;
        if !(cb.norm() <= CRIT_RADIUS) {
            return Err(Error::NoCriticalPoint);
        }
        if dc.norm() <= CRIT_TOL {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::NoCriticalPoint);
    }
    if cb.norm() > 1e-14 {
        let f = pair.frames();
        let w: Series2 = f.zeros_w();
        let (nx, ny) = w.degrees();
        let (rx, ry) = w.radii();
        let x = Series2::var_x(nx, ny, w.center(), rx, ry).add_const(cb);
        let y = Series2::var_y(nx, ny, w.center(), rx, ry);
        pair.bfun = compose2(&pair.bfun, &x, &y)?;
        let s = pair.bfun.eval(ZERO, ZERO);
        if !(s.norm() >= 1e-12) {
            return Err(Error::ZeroScaling { modulus: s.norm() });
        }
        pair = rescale(&pair, s)?;
    }
    // add c x³ + d x⁴ to b to kill the commutator at orders 0 and 2
    let xj = Jet::var_s(ZERO, 2);
    let yj = Jet::constant(ZERO, 2);
    let aj = pair.a.eval_jet(&xj, &yj);
    let (a0, a1, a2) = (aj.value(), aj.coef(1, 0), aj.coef(2, 0) * 2.0);
    let (d0, d2) = pair.commutator_defects();
    let m = [
        [a0 * a0 * a0, a0 * a0 * a0 * a0],
        [6.0 * a0 * a1 * a1 + 3.0 * a0 * a0 * a2, 12.0 * a0 * a0 * a1 * a1 + 4.0 * a0 * a0 * a0 * a2],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det.norm() >= 1e-14) {
        return Err(Error::SingularCorrection { det: det.norm() });
    }
    let c = (d0 * m[1][1] - m[0][1] * d2) / det;
    let d = (m[0][0] * d2 - m[1][0] * d0) / det;
    let x = pair.bfun.like().affine(ZERO, ONE, ZERO);
    let x3 = &(&x * &x) * &x;
    let x4 = &x3 * &x;
    pair.bfun = &(&pair.bfun + &x3.scale(c)) + &x4.scale(d);
    Ok(Projected { pair, c_b: cb, correction_c: c, correction_d: d })
}

/// `𝐑 = Π∘𝐑̃`.
pub fn renormalize2d(s: &Pair2D) -> Result<Pair2D> {
    Ok(renormalize2d_traced(s)?.0)
}

/// One level of the renormalization trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    pub eps_y: f64,
    pub defect0: f64,
    pub defect2: f64,
    pub lambda: [f64; 2],
    pub c_a: [f64; 2],
    pub correction_c: f64,
    pub correction_d: f64,
    /// `‖𝐑(Σ) − ι(π₁Σ)‖`, absent when the embedding is undefined.
    pub residual_to_embedding: Option<f64>,
}

pub fn renormalize2d_traced(s: &Pair2D) -> Result<(Pair2D, TraceLevel)> {
    let pre = prerenorm2d(s)?;
    let st = straighten(&pre)?;
    let rec = recenter_rescale(&st)?;
    let pr = project_ac(&rec)?;
    let out = pr.pair;
    let (d0, d2) = out.commutator_defects();
    let residual = embed_1d(&restrict_1d(s), &s.frames()).ok().map(|e| out.distance(&e));
    let tr = TraceLevel {
        eps_y: out.y_norm(),
        defect0: d0.norm(),
        defect2: d2.norm(),
        lambda: [rec.lambda.re, rec.lambda.im],
        c_a: [rec.c_a.re, rec.c_a.im],
        correction_c: pr.correction_c.norm(),
        correction_d: pr.correction_d.norm(),
        residual_to_embedding: residual,
    };
    Ok((out, tr))
}
