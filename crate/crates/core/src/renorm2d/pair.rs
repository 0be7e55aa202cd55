use super::map::HenonMap;
use super::tower::{HenonTower, LevelParams};
use super::{Y_NORM_RADIUS, Y_RADIUS};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::renorm1d::Domains;
use crate::scalar::{Scalar, C64};
use crate::series::Series2;
use serde::{Deserialize, Serialize};

pub type Point = (C64, C64);

/// Degrees and polydiscs for two-dimensional series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frames2 {
    pub dom: Domains,
    pub ry: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Frames2 {
    fn default() -> Self {
        Frames2 { dom: Domains::default(), ry: Y_RADIUS, nx: 80, ny: 3 }
    }
}

impl Frames2 {
    /// Frames for the Hénon tower: lower x-degree, y-radius equal to the norm radius.
    pub fn tower() -> Self {
        Frames2 { dom: Domains::default(), ry: Y_NORM_RADIUS, nx: 40, ny: 4 }
    }

    pub fn zeros_z<S: Scalar>(&self) -> Series2<S> {
        Series2::zeros(self.nx, self.ny, self.dom.c_z, self.dom.r_z, self.ry)
    }

    pub fn zeros_w<S: Scalar>(&self) -> Series2<S> {
        Series2::zeros(self.nx, self.ny, self.dom.c_w, self.dom.r_w, self.ry)
    }
}

/// `Σ = (A, B)` with `A = (a, h)` on `Ω` and `B = (bfun, x)` on `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair2D<S = C64> {
    pub a: Series2<S>,
    pub h: Series2<S>,
    pub bfun: Series2<S>,
}

impl Serialize for Pair2D<C64> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Pair2D", 3)?;
        st.serialize_field("a", &self.a)?;
        st.serialize_field("h", &self.h)?;
        st.serialize_field("b", &self.bfun)?;
        st.end()
    }
}

impl<S: Scalar> Pair2D<S> {
    pub fn new(a: Series2<S>, h: Series2<S>, bfun: Series2<S>) -> Result<Self> {
        if a.center() != h.center() || a.radii() != h.radii() || a.degrees() != h.degrees() {
            return Err(Error::Validation("a and h must share a frame".into()));
        }
        Ok(Pair2D { a, h, bfun })
    }

    pub fn frames(&self) -> Frames2 {
        let (nx, ny) = self.a.degrees();
        let (r_z, ry) = self.a.radii();
        Frames2 {
            dom: Domains { c_z: self.a.center(), r_z, c_w: self.bfun.center(), r_w: self.bfun.radii().0 },
            ry,
            nx,
            ny,
        }
    }

    /// `‖Σ‖_y`: the largest y-derivative majorant of `a`, `h`, `b` at the norm radius.
    pub fn y_norm(&self) -> f64 {
        [&self.a, &self.h, &self.bfun].iter().map(|s| s.y_norm_at(Y_NORM_RADIUS)).fold(0.0, f64::max)
    }

    /// Majorant distance to another pair in the same frames.
    pub fn distance(&self, other: &Pair2D<S>) -> f64 {
        let d = |p: &Series2<S>, q: &Series2<S>| (p - q).majorant();
        d(&self.a, &other.a).max(d(&self.h, &other.h)).max(d(&self.bfun, &other.bfun))
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.h.is_finite() && self.bfun.is_finite()
    }

    pub fn convert<T: Scalar>(&self) -> Pair2D<T> {
        Pair2D { a: self.a.convert(), h: self.h.convert(), bfun: self.bfun.convert() }
    }

    pub fn apply_a(&self, x: S, y: S) -> (S, S) {
        (self.a.eval(x, y), self.h.eval(x, y))
    }

    pub fn apply_b(&self, x: S, y: S) -> (S, S) {
        (self.bfun.eval(x, y), x)
    }

    pub fn apply_a_jet(&self, x: &Jet<S>, y: &Jet<S>) -> (Jet<S>, Jet<S>) {
        (self.a.eval_jet(x, y), self.h.eval_jet(x, y))
    }

    pub fn apply_b_jet(&self, x: &Jet<S>, y: &Jet<S>) -> (Jet<S>, Jet<S>) {
        (self.bfun.eval_jet(x, y), x.clone())
    }

    /// `π₁[A, B]` and its second derivative at 0.
    pub fn commutator_defects(&self) -> (S, S) {
        let x = Jet::var_s(S::zero(), 2);
        let y = Jet::constant(S::zero(), 2);
        let (u, v) = self.apply_b_jet(&x, &y);
        let ab = self.a.eval_jet(&u, &v);
        let (u, v) = self.apply_a_jet(&x, &y);
        let ba = self.bfun.eval_jet(&u, &v);
        let d = &ab - &ba;
        (d.value(), d.coef(2, 0).scale(2.0))
    }

    /// Jacobian determinants of `A` and `B` at a point.
    pub fn jacobians(&self, x: S, y: S) -> (S, S) {
        let xj = Jet::var_s(x, 1);
        let yj = Jet::var_t(y, 1);
        let (u, v) = self.apply_a_jet(&xj, &yj);
        let ja = u.coef(1, 0) * v.coef(0, 1) - u.coef(0, 1) * v.coef(1, 0);
        let jb = -self.bfun.eval_jet(&xj, &yj).coef(0, 1);
        (ja, jb)
    }
}

impl Pair2D<C64> {
    /// The structural and normalization defects: `|π₁B(0) − 1|`, and the
    /// x-derivatives of `π₁A`, `π₁B` at 0.
    pub fn critical_defects(&self) -> (f64, f64, f64) {
        let z = C64::new(0.0, 0.0);
        let x = Jet::var_s(z, 1);
        let y = Jet::constant(z, 1);
        (
            (self.bfun.eval(z, z) - 1.0).norm(),
            self.a.eval_jet(&x, &y).coef(1, 0).norm(),
            self.bfun.eval_jet(&x, &y).coef(1, 0).norm(),
        )
    }
}

/// `Σ_H = Λ(H², H)`: the Hénon pair in the chart rescaled by `λ_Σ = π₁H(0) = c`.
pub fn henon_pair(hm: &HenonMap, frames: &Frames2) -> Result<Pair2D> {
    if hm.c.norm() < 1e-12 {
        return Err(Error::ZeroScaling { modulus: hm.c.norm() });
    }
    HenonTower::level_pair(hm, &LevelParams::<C64>::base(), frames)
}
