//! One-dimensional renormalization of critical commuting pairs.
//!
//! A pair `ζ = (η, ξ)` holds two series: `η` on the disc `Z` and `ξ` on `W`.
//! The operator is `ℛ(ζ) = (λ⁻¹ η∘ξ∘η(λx), λ⁻¹ η∘ξ(λx))` with `λ = η(ξ(0))`.
//! The fixed point is found by Newton's method on the normalized slice
//! `η'(0) = ξ'(0) = 0`, `ξ(0) = 1`, after projecting onto pairs whose
//! commutator vanishes to second order at 0.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::C64;
use crate::series::{compose1_with_slack, revert_about_with_radius, Series1, DEFAULT_DOMAIN_SLACK};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Expansion discs of the two series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domains {
    pub c_z: C64,
    pub r_z: f64,
    pub c_w: C64,
    pub r_w: f64,
}

impl Default for Domains {
    fn default() -> Self {
        Domains { c_z: C64::new(0.45, -0.35), r_z: 0.6, c_w: C64::new(-0.1, -0.35), r_w: 0.5 }
    }
}

pub const DEFAULT_DEGREE: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair1D {
    pub eta: Series1,
    pub xi: Series1,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Pair1D {
    pub fn new(eta: Series1, xi: Series1) -> Self {
        Pair1D { eta, xi }
    }

    /// `λ = η(ξ(0))`.
    pub fn lambda(&self) -> C64 {
        self.eta.eval(self.xi.eval(c(0.0, 0.0)))
    }

    pub fn degree(&self) -> usize {
        self.eta.degree()
    }

    pub fn domains(&self) -> Domains {
        Domains { c_z: self.eta.center(), r_z: self.eta.radius(), c_w: self.xi.center(), r_w: self.xi.radius() }
    }

    /// Pair norm `(‖Δη‖ + ‖Δξ‖)/2` with majorants on each disc.
    pub fn distance(&self, other: &Pair1D) -> f64 {
        0.5 * ((&self.eta - &other.eta).majorant() + (&self.xi - &other.xi).majorant())
    }

    /// Critical-pair normalization errors `(η'(0), ξ'(0), ξ(0) - 1)`.
    pub fn normalization_error(&self) -> f64 {
        let z = c(0.0, 0.0);
        self.eta.deriv_eval(z).norm().max(self.xi.deriv_eval(z).norm()).max((self.xi.eval(z) - 1.0).norm())
    }

    pub fn is_finite(&self) -> bool {
        self.eta.is_finite() && self.xi.is_finite()
    }

    pub fn resized(&self, degree: usize) -> Pair1D {
        Pair1D { eta: self.eta.resized(degree), xi: self.xi.resized(degree) }
    }
}

/// Value and second derivative at 0 of `η∘ξ - ξ∘η`.
pub fn commutator_defects(z: &Pair1D) -> (C64, C64) {
    let x = Jet::var_s(c(0.0, 0.0), 2);
    let ex = z.eta.eval_jet(&z.xi.eval_jet(&x));
    let xe = z.xi.eval_jet(&z.eta.eval_jet(&x));
    let d = &ex - &xe;
    (d.value(), d.coef(2, 0) * 2.0)
}

/// The multiplier formula `c = (1+μν)(μ/2+ν/2) - (μ/2+ν/2)²`.
pub fn siegel_c(mu: C64, nu: C64) -> C64 {
    let m = (mu + nu) * 0.5;
    (1.0 + mu * nu) * m - m * m
}

/// Golden-mean multiplier `e^{2πiθ}`.
pub fn mu_star() -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * crate::goldenrot::theta())
}

/// The rescaled quadratic pair `(c⁻¹f²(cx), c⁻¹f(cx))` of `f(x) = x² + c`.
pub fn quad_pair(cq: C64, degree: usize, dom: Domains) -> Result<Pair1D> {
    if cq.norm() < 1e-12 {
        return Err(Error::ZeroScaling { modulus: cq.norm() });
    }
    let z = c(0.0, 0.0);
    let eta = [1.0 + cq, z, 2.0 * cq * cq, z, cq * cq * cq];
    let xi = [c(1.0, 0.0), z, cq];
    // Polynomials are entire, so compositions may evaluate them anywhere.
    Ok(Pair1D {
        eta: Series1::from_poly(&eta, degree, dom.c_z, dom.r_z).with_validity(f64::INFINITY),
        xi: Series1::from_poly(&xi, degree, dom.c_w, dom.r_w).with_validity(f64::INFINITY),
    })
}

/// Plain operator `ℛ` with the default domain slack.
pub fn renormalize1d(z: &Pair1D) -> Result<Pair1D> {
    renormalize1d_with_slack(z, DEFAULT_DOMAIN_SLACK)
}

pub fn renormalize1d_with_slack(z: &Pair1D, slack: f64) -> Result<Pair1D> {
    let lam = z.lambda();
    if !(lam.norm() >= 1e-12) {
        return Err(Error::ZeroScaling { modulus: lam.norm() });
    }
    let n = z.degree();
    let zs = c(0.0, 0.0);
    let lin_z = Series1::from_poly(&[zs, lam], n, z.eta.center(), z.eta.radius()).with_validity(f64::INFINITY);
    let lin_w = Series1::from_poly(&[zs, lam], n, z.xi.center(), z.xi.radius()).with_validity(f64::INFINITY);
    let e1 = compose1_with_slack(&z.eta, &lin_z, slack)?;
    let x1 = compose1_with_slack(&z.xi, &e1, slack)?;
    let eta = compose1_with_slack(&z.eta, &x1, slack)?.scale(1.0 / lam);
    let x2 = compose1_with_slack(&z.xi, &lin_w, slack)?;
    let xi = compose1_with_slack(&z.eta, &x2, slack)?.scale(1.0 / lam);
    let norm = normalize(&Pair1D { eta: eta.clone(), xi: xi.clone() });
    let out = Pair1D { eta: norm.eta.with_validity(eta.validity()), xi: norm.xi.with_validity(xi.validity()) };
    if !out.is_finite() {
        return Err(Error::NonFinite("renormalize1d".into()));
    }
    Ok(out)
}

/// Project onto the slice `η'(0) = ξ'(0) = 0`, `ξ(0) = 1` by adjusting the
/// first coefficients about each centre.
pub fn normalize(z: &Pair1D) -> Pair1D {
    from_unknowns(&to_unknowns(z), z.degree(), z.domains())
}

/// Add `p x³ + q x⁴` to `ξ` so that the commutator and its second
/// derivative vanish at 0. Returns the corrected pair and `(p, q)`.
pub fn project_ac_1d(z: &Pair1D) -> Result<(Pair1D, C64, C64)> {
    let (d0, d2) = commutator_defects(z);
    let x = Jet::var_s(c(0.0, 0.0), 2);
    let ej = z.eta.eval_jet(&x);
    let (e0, e2) = (ej.value(), ej.coef(2, 0) * 2.0);
    // d0 - p e0³ - q e0⁴ = 0 ; d2 - (3p e0² + 4q e0³) e2 = 0
    let m = [[e0 * e0 * e0, e0 * e0 * e0 * e0], [3.0 * e0 * e0 * e2, 4.0 * e0 * e0 * e0 * e2]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < 1e-14 {
        return Err(Error::SingularCorrection { det: det.norm() });
    }
    let p = (d0 * m[1][1] - m[0][1] * d2) / det;
    let q = (m[0][0] * d2 - m[1][0] * d0) / det;
    let zs = c(0.0, 0.0);
    let poly = Series1::from_poly(&[zs, zs, zs, p, q], z.degree(), z.xi.center(), z.xi.radius());
    Ok((Pair1D { eta: z.eta.clone(), xi: &z.xi + &poly }, p, q))
}

/// The map whose fixed point is computed: `ℛ` followed by the projection.
pub fn newton_map(z: &Pair1D) -> Result<Pair1D> {
    let r = renormalize1d(z)?;
    Ok(normalize(&project_ac_1d(&r)?.0))
}

/// Coordinates on the normalized slice, scaled by powers of the radii:
/// `[η_0, η_k r_Z^k (k ≥ 2), ξ_k r_W^k (k ≥ 2)]`, coefficients about the centres.
pub fn to_unknowns(z: &Pair1D) -> Vec<C64> {
    let n = z.degree();
    let (rz, rw) = (z.eta.radius(), z.xi.radius());
    let mut u = Vec::with_capacity(2 * n - 1);
    u.push(z.eta.coeffs()[0]);
    u.extend((2..=n).map(|k| z.eta.coeffs()[k] * rz.powi(k as i32)));
    u.extend((2..=n).map(|k| z.xi.coeffs()[k] * rw.powi(k as i32)));
    u
}

/// Inverse of [`to_unknowns`]: solves for `η_1`, `ξ_1`, `ξ_0` from the normalization.
pub fn from_unknowns(u: &[C64], n: usize, dom: Domains) -> Pair1D {
    let zs = c(0.0, 0.0);
    let mut e = vec![zs; n + 1];
    let mut x = vec![zs; n + 1];
    e[0] = u[0];
    for k in 2..=n {
        e[k] = u[k - 1] / dom.r_z.powi(k as i32);
        x[k] = u[n - 1 + k - 1] / dom.r_w.powi(k as i32);
    }
    // η'(0) = Σ k e_k (-c_z)^{k-1} = 0
    let hz = -dom.c_z;
    e[1] = -(2..=n).map(|k| e[k] * k as f64 * hz.powi(k as i32 - 1)).sum::<C64>();
    let hw = -dom.c_w;
    x[1] = -(2..=n).map(|k| x[k] * k as f64 * hw.powi(k as i32 - 1)).sum::<C64>();
    // ξ(0) = 1
    let rest: C64 = (1..=n).map(|k| x[k] * hw.powi(k as i32)).sum();
    x[0] = c(1.0, 0.0) - rest;
    Pair1D { eta: Series1::from_parts(e, dom.c_z, dom.r_z), xi: Series1::from_parts(x, dom.c_w, dom.r_w) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub fd_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-11, max_iters: 50, fd_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub zstar: Pair1D,
    pub lambda: C64,
    pub residual: f64,
    pub iterations: usize,
}

/// Residual `G(ζ) - ζ` in the pair norm.
pub fn fixed_point_residual(z: &Pair1D) -> Result<f64> {
    Ok(newton_map(z)?.distance(z))
}

fn residual_vector(u: &[C64], n: usize, dom: Domains) -> Result<Vec<C64>> {
    let z = from_unknowns(u, n, dom);
    let g = to_unknowns(&newton_map(&z)?);
    Ok(g.iter().zip(u).map(|(a, b)| a - b).collect())
}

/// Central-difference Jacobian of `u ↦ to_unknowns(G(from_unknowns(u)))`
/// restricted to the listed coordinates (rows and columns).
fn fd_jacobian(u: &[C64], n: usize, dom: Domains, idx: &[usize], h: f64) -> Result<DMatrix<C64>> {
    let cols: Vec<Vec<C64>> = idx
        .par_iter()
        .map(|&j| {
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[j] += h;
            um[j] -= h;
            let gp = to_unknowns(&newton_map(&from_unknowns(&up, n, dom))?);
            let gm = to_unknowns(&newton_map(&from_unknowns(&um, n, dom))?);
            Ok(idx.iter().map(|&i| (gp[i] - gm[i]) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    let m = idx.len();
    Ok(DMatrix::from_fn(m, m, |i, j| cols[j][i]))
}

/// Newton's method for the fixed point of [`newton_map`].
pub fn newton_fixed_point(seed: &Pair1D, cfg: &NewtonConfig) -> Result<FixedPoint> {
    let n = seed.degree();
    let dom = seed.domains();
    let mut u = to_unknowns(&normalize(seed));
    let all: Vec<usize> = (0..u.len()).collect();
    let mut residual = f64::INFINITY;
    for it in 0..cfg.max_iters {
        let z = from_unknowns(&u, n, dom);
        residual = fixed_point_residual(&z)?;
        if residual < cfg.tol {
            return Ok(FixedPoint { lambda: z.lambda(), zstar: z, residual, iterations: it });
        }
        let f = residual_vector(&u, n, dom)?;
        let mut jac = fd_jacobian(&u, n, dom, &all, cfg.fd_step)?;
        for i in 0..u.len() {
            jac[(i, i)] -= c(1.0, 0.0);
        }
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        for (ui, si) in u.iter_mut().zip(step.iter()) {
            *ui += si;
        }
    }
    Err(Error::NoConvergence { iters: cfg.max_iters, residual })
}

/// Standard seed: `ℛ^k` applied to the golden-mean quadratic pair.
pub fn default_seed(degree: usize, dom: Domains, warmup: usize) -> Result<Pair1D> {
    let mut z = quad_pair(siegel_c(mu_star(), c(0.0, 0.0)), degree, dom)?;
    for _ in 0..warmup {
        z = renormalize1d(&z)?;
    }
    Ok(z)
}

/// Solve for the fixed point from the standard seed.
pub fn solve_fixed_point(degree: usize, cfg: &NewtonConfig) -> Result<FixedPoint> {
    newton_fixed_point(&default_seed(degree, Domains::default(), 10)?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub expanding_count: usize,
    pub matrix_dim: usize,
    /// Residual of the fixed point the differential was taken at.
    pub base_residual: f64,
    pub fd_step: f64,
}

/// Leading eigenvalues of the differential at the fixed point, from a
/// `dim`-dimensional Krylov projection.
///
/// Arnoldi's method runs on finite-difference directional derivatives of the
/// fixed-point map with step `1e-7`; the eigenvalues of the resulting
/// `dim × dim` Hessenberg matrix are computed densely.
pub fn differential_spectrum(zstar: &Pair1D, dim: usize) -> Result<SpectrumReport> {
    differential_spectrum_with(zstar, dim, 1e-6, 0.6)
}

#[doc(hidden)]
pub fn differential_spectrum_with(zstar: &Pair1D, dim: usize, h: f64, decay: f64) -> Result<SpectrumReport> {
    let n = zstar.degree();
    let dom = zstar.domains();
    let u0 = to_unknowns(zstar);
    let m = u0.len();
    if dim == 0 || dim > m {
        return Err(Error::Validation(format!("dimension {dim} must be in 1..={m}")));
    }
    let base_residual = fixed_point_residual(zstar)?;
    let apply = |v: &[C64]| -> Result<Vec<C64>> {
        let up: Vec<C64> = u0.iter().zip(v).map(|(a, b)| a + b * h).collect();
        let um: Vec<C64> = u0.iter().zip(v).map(|(a, b)| a - b * h).collect();
        let (gp, gm) = rayon::join(
            || newton_map(&from_unknowns(&up, n, dom)),
            || newton_map(&from_unknowns(&um, n, dom)),
        );
        let (gp, gm) = (to_unknowns(&gp?), to_unknowns(&gm?));
        Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let norm = |a: &[C64]| -> f64 { a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() };
    // Deterministic start vector touching every coordinate.
    let deg_of = |i: usize| if i == 0 { 0 } else if i < n { i + 1 } else { i - n + 2 };
    let mut v0: Vec<C64> = (0..m).map(|i| c(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()) * decay.powi(deg_of(i) as i32)).collect();
    let n0 = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= n0);
    let mut basis = vec![v0];
    let mut hess = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        let mut w = apply(&basis[j])?;
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let p = dot(q, &w);
                hess[(i, j)] += p;
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
        }
        let beta = norm(&w);
        if j + 1 < dim {
            if beta < 1e-13 {
                break;
            }
            hess[(j + 1, j)] = c(beta, 0.0);
            basis.push(w.iter().map(|x| x / beta).collect());
        }
    }
    let mut eig: Vec<C64> = hess
        .schur()
        .eigenvalues()
        .ok_or(Error::NoConvergence { iters: 0, residual: f64::NAN })?
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let expanding_count = eig.iter().filter(|e| e.norm() > 1.0).count();
    Ok(SpectrumReport { eigenvalues: eig, expanding_count, matrix_dim: dim, base_residual, fd_step: h })
}

/// Eigenvalues of the full finite-difference differential at the fixed point.
pub fn full_differential_spectrum(zstar: &Pair1D) -> Result<SpectrumReport> {
    let n = zstar.degree();
    let u0 = to_unknowns(zstar);
    let idx: Vec<usize> = (0..u0.len()).collect();
    let base_residual = fixed_point_residual(zstar)?;
    let h = 1e-7;
    let jac = fd_jacobian(&u0, n, zstar.domains(), &idx, h)?;
    let mut eig: Vec<C64> = jac
        .schur()
        .eigenvalues()
        .ok_or(Error::NoConvergence { iters: 0, residual: f64::NAN })?
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let expanding_count = eig.iter().filter(|e| e.norm() > 1.0).count();
    Ok(SpectrumReport { eigenvalues: eig, expanding_count, matrix_dim: idx.len(), base_residual, fd_step: h })
}

/// `g*(x) = η*⁻¹(λ* x)` in the shifted coordinate `x ↦ x - 1`:
/// the series of `𝐠*(x) = g*(1 + x) - 1` about 0 on the disc of `radius`.
pub fn gstar_shifted(zstar: &Pair1D, radius: f64) -> Result<Series1> {
    let lam = zstar.lambda();
    let one = c(1.0, 0.0);
    let inv_radius = lam.norm() * radius * 1.5;
    let inv = revert_about_with_radius(&zstar.eta, one, inv_radius)?;
    let n = zstar.degree();
    let inner = Series1::from_poly(&[lam, lam], n, c(0.0, 0.0), radius);
    let inv = inv.resized(n);
    Ok(crate::series::compose1(&inv, &inner)?.add_const(-one))
}

/// The linearizer `u*` of `𝐠*` at 0, normalized by `u*'(0) = 1`.
pub fn linearize_gstar(zstar: &Pair1D) -> Result<Series1> {
    let radius = 0.25;
    let g = gstar_shifted(zstar, radius)?;
    let lam2 = zstar.lambda() * zstar.lambda();
    let slope = g.coeffs()[1];
    if (slope - lam2).norm() > 1e-8 {
        return Err(Error::Validation(format!("g*'(1) = {slope} differs from λ*² = {lam2}")));
    }
    let mut iter = g.clone();
    let mut scale = c(1.0, 0.0) / lam2;
    let mut u = iter.scale(scale);
    for it in 0..200 {
        iter = crate::series::compose1(&g, &iter)?;
        scale /= lam2;
        let next = iter.scale(scale);
        let diff = (&next - &u).majorant();
        u = next;
        if diff < 1e-11 {
            return Ok(u);
        }
        if !diff.is_finite() {
            return Err(Error::NoConvergence { iters: it, residual: diff });
        }
    }
    Err(Error::NoConvergence { iters: 200, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstar() -> C64 {
        siegel_c(mu_star(), c(0.0, 0.0))
    }

    #[test]
    fn siegel_c_values() {
        let cs = cstar();
        assert!((cs - c(-0.390541, -0.586788)).norm() < 1e-6, "{cs}");
        assert_eq!(siegel_c(c(0.0, 0.0), c(0.0, 0.0)), c(0.0, 0.0));
        assert!((siegel_c(c(1.0, 0.0), c(0.0, 0.0)) - 0.25).norm() < 1e-15);
    }

    #[test]
    fn quad_pair_is_critical_and_commuting() {
        let z = quad_pair(cstar(), 40, Domains::default()).unwrap();
        assert!((z.xi.eval(c(0.0, 0.0)) - 1.0).norm() < 1e-14);
        assert!((z.eta.eval(c(0.0, 0.0)) - (1.0 + cstar())).norm() < 1e-14);
        let (d0, d2) = commutator_defects(&z);
        assert!(d0.norm() < 1e-12 && d2.norm() < 1e-12);
        assert!(matches!(quad_pair(c(0.0, 0.0), 10, Domains::default()), Err(Error::ZeroScaling { .. })));
    }

    #[test]
    fn self_commuting_pair_has_no_defect() {
        let z = quad_pair(cstar(), 30, Domains::default()).unwrap();
        let same = Pair1D { eta: z.xi.clone(), xi: z.xi.clone() };
        let (d0, d2) = commutator_defects(&same);
        assert!(d0.norm() < 1e-14 && d2.norm() < 1e-14);
    }

    #[test]
    fn unknowns_roundtrip() {
        let z = normalize(&quad_pair(cstar(), 30, Domains::default()).unwrap());
        let back = from_unknowns(&to_unknowns(&z), 30, z.domains());
        assert!(back.distance(&z) < 1e-13);
        assert!(back.normalization_error() < 1e-13);
    }

    #[test]
    fn renormalized_quadratic_pair_stays_commuting() {
        // truncation at degree 40 leaves a defect of 1e-6 after three steps
        let mut z = quad_pair(cstar(), 80, Domains::default()).unwrap();
        for _ in 0..3 {
            z = renormalize1d(&z).unwrap();
            let (d0, d2) = commutator_defects(&z);
            assert!(d0.norm() < 1e-12 && d2.norm() < 1e-12, "{d0} {d2}");
            assert!(z.normalization_error() < 1e-12);
        }
    }
}
