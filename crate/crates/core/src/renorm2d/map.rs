use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::renorm1d::{mu_star, siegel_c};
use crate::scalar::{Scalar, C64};
use crate::series::Series2;
use serde::{Deserialize, Serialize};

/// `H(x, y) = (x² + c − b y, x)` with `b = μν` and `c = siegel_c(μ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonMap {
    pub mu: C64,
    pub nu: C64,
    pub c: C64,
    pub b: C64,
}

impl HenonMap {
    pub fn new(mu: C64, nu: C64) -> Result<Self> {
        if !(nu.norm() < 1.0) {
            return Err(Error::Validation(format!("|nu| = {} must be below 1", nu.norm())));
        }
        if !((mu.norm() - 1.0).abs() < 1e-12) {
            return Err(Error::Validation(format!("|mu| = {} must be 1", mu.norm())));
        }
        Ok(HenonMap { mu, nu, c: siegel_c(mu, nu), b: mu * nu })
    }

    /// The golden-mean map with real dissipation `nu`.
    pub fn golden(nu: f64) -> Result<Self> {
        Self::new(mu_star(), C64::new(nu, 0.0))
    }

    pub fn jacobian(&self) -> C64 {
        self.b
    }

    pub fn apply(&self, (x, y): (C64, C64)) -> (C64, C64) {
        (x * x + self.c - self.b * y, x)
    }

    pub fn apply_inverse(&self, (x, y): (C64, C64)) -> Result<(C64, C64)> {
        if self.b.norm() == 0.0 {
            return Err(Error::ZeroJacobian { modulus: 0.0 });
        }
        Ok((y, (y * y + self.c - x) / self.b))
    }

    /// Conjugation `s(x, y) = (c x, c y)` from the rescaled chart to `H`.
    pub fn to_physical(&self, (x, y): (C64, C64)) -> (C64, C64) {
        (self.c * x, self.c * y)
    }

    /// `s⁻¹∘H∘s = (c x² + 1 − b y, x)` with constants in precision `S`.
    pub fn scaled<S: Scalar>(&self) -> ScaledMap<S> {
        ScaledMap { c: S::from_c64(self.c), b: S::from_c64(self.b) }
    }
}

/// The rescaled Hénon map `B₀(x, y) = (c x² + 1 − b y, x)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMap<S> {
    pub c: S,
    pub b: S,
}

impl<S: Scalar> ScaledMap<S> {
    pub fn step(&self, x: S, y: S) -> (S, S) {
        (self.c * x * x + S::one() - self.b * y, x)
    }

    pub fn iterate(&self, mut x: S, mut y: S, n: u64) -> (S, S) {
        for _ in 0..n {
            (x, y) = self.step(x, y);
        }
        (x, y)
    }

    /// Iterate with the tangent vector `(dx, dy)`.
    pub fn iterate_tangent(&self, mut z: [S; 4], n: u64) -> [S; 4] {
        for _ in 0..n {
            let [x, y, dx, dy] = z;
            z = [self.c * x * x + S::one() - self.b * y, x, (self.c * x).scale(2.0) * dx - self.b * dy, dx];
        }
        z
    }

    pub fn iterate_jet(&self, mut x: Jet<S>, mut y: Jet<S>, n: u64) -> (Jet<S>, Jet<S>) {
        for _ in 0..n {
            let nx = (&x.square().scale(self.c) - &y.scale(self.b)).add_scalar(S::one());
            y = x;
            x = nx;
        }
        (x, y)
    }

    /// Iterate jets together with the tangent `(dx, dy)` seeded at `(1, 0)`.
    pub fn iterate_jet_tangent(&self, x: Jet<S>, y: Jet<S>, n: u64) -> [Jet<S>; 4] {
        let k = x.order();
        let mut z = [x, y, Jet::constant(S::one(), k), Jet::constant(S::zero(), k)];
        for _ in 0..n {
            let [x, y, dx, dy] = z;
            let nx = (&x.square().scale(self.c) - &y.scale(self.b)).add_scalar(S::one());
            let ndx = &(&x * &dx).scale(self.c.scale(2.0)) - &dy.scale(self.b);
            z = [nx, x, ndx, dx];
        }
        z
    }

    /// Iterate series, calling `visit(k, x_k)` after every step.
    pub fn iterate_series(
        &self,
        mut x: Series2<S>,
        mut y: Series2<S>,
        n: u64,
        mut visit: impl FnMut(u64, &Series2<S>),
    ) -> (Series2<S>, Series2<S>) {
        for k in 1..=n {
            let nx = (&x.square().scale(self.c) - &y.scale(self.b)).add_const(S::one());
            y = x;
            x = nx;
            visit(k, &x);
        }
        (x, y)
    }

    /// Iterate series with the tangent in the x-direction.
    pub fn iterate_series_tangent(&self, x: Series2<S>, y: Series2<S>, n: u64) -> [Series2<S>; 4] {
        let one = x.like().add_const(S::one());
        let zero = x.like();
        let mut z = [x, y, one, zero];
        for _ in 0..n {
            let [x, y, dx, dy] = z;
            let nx = (&x.square().scale(self.c) - &y.scale(self.b)).add_const(S::one());
            let ndx = &(&x * &dx).scale(self.c.scale(2.0)) - &dy.scale(self.b);
            z = [nx, x, ndx, dx];
        }
        z
    }
}
