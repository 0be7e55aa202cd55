use super::operator::{inverse_branch_jet, renormalize2d_traced};
use super::pair::{Pair2D, Point};
use super::tower::{HenonTower, LevelParams};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::C64;
use crate::series::Series2;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);

pub type Matrix2 = [[C64; 2]; 2];

fn matmul(p: &Matrix2, q: &Matrix2) -> Matrix2 {
    let mut r = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
        }
    }
    r
}

#[derive(Debug, Clone)]
enum StageMap {
    /// `Ψ_k⁻¹∘Ψ_{k+1}` of a Hénon tower.
    Tower { tower: HenonTower, outer: LevelParams<C64>, inner: LevelParams<C64> },
    /// `(x, y) ↦ (a_{λy+c}⁻¹(λx + c), λy + c)` of the series operator.
    Operator { a: Series2, ax: Series2 },
}

/// One change of coordinates `Φ_k(x, y) = (φ(x, y), λ y + c)` between
/// consecutive renormalization levels.
#[derive(Debug, Clone)]
pub struct MicroscopeStage {
    pub level: usize,
    pub lambda: C64,
    pub c: C64,
    map: StageMap,
}

impl MicroscopeStage {
    pub fn apply(&self, (x, y): Point) -> Result<Point> {
        let v = self.lambda * y + self.c;
        match &self.map {
            StageMap::Tower { tower, outer, inner } => {
                let z = tower.chart(inner.level, (x, y))?;
                let (u, _) = tower.hm.scaled::<C64>().iterate(z.0, z.1, outer.qb - 1);
                Ok(((u - outer.c) / outer.lambda, v))
            }
            StageMap::Operator { a, ax } => {
                let t = Jet::constant(self.lambda * x + self.c, 0);
                let p = inverse_branch_jet(a, ax, &t, &Jet::constant(v, 0), C64::new(1.0, 0.0))?;
                Ok((p.value(), v))
            }
        }
    }

    /// The differential `[[φ_x, φ_y], [0, λ]]`.
    ///
    /// For tower stages `φ_y` is obtained by pulling the kernel direction of
    /// the inner chart back along the orbit, which avoids cancellation.
    pub fn differential(&self, (x, y): Point) -> Result<Matrix2> {
        let (px, py) = match &self.map {
            StageMap::Tower { tower, outer, inner } => {
                let map = tower.hm.scaled::<C64>();
                let z = tower.chart(inner.level, (x, y))?;
                let (m, n) = (outer.qb - 1, inner.qb - 1);
                let mut xs = Vec::with_capacity(n as usize + 1);
                let mut st = [z.0, z.1, C64::new(1.0, 0.0), ZERO];
                let mut dchi_outer = ZERO;
                for j in 0..=n {
                    if j == m {
                        dchi_outer = st[2];
                    }
                    xs.push(st[0]);
                    if j < n {
                        st = map.iterate_tangent(st, 1);
                    }
                }
                let dchi_inner = st[2];
                if dchi_inner.norm() < 1e-300 {
                    return Err(Error::SingularJacobian);
                }
                let px = dchi_outer * inner.lambda / (dchi_inner * outer.lambda);
                let py = if map.b == ZERO {
                    ZERO
                } else {
                    let w = map.b.powu(n as u32) * inner.lambda / dchi_inner;
                    let (mut t1, mut t2) = (ZERO, w);
                    for j in (m..n).rev() {
                        let nt2 = (map.c * xs[j as usize] * 2.0 * t2 - t1) / map.b;
                        t1 = t2;
                        t2 = nt2;
                    }
                    t1 / outer.lambda
                };
                (px, py)
            }
            StageMap::Operator { a, ax } => {
                let (p, v) = self.apply((x, y))?;
                let d = ax.eval(p, v);
                if d.norm() < 1e-300 {
                    return Err(Error::SingularJacobian);
                }
                let ay = a.partial_y().eval(p, v);
                (self.lambda / d, -self.lambda * ay / d)
            }
        };
        Ok([[px, py], [ZERO, self.lambda]])
    }
}

/// The composite `Φ^n_k = Φ_k∘Φ_{k+1}∘…∘Φ_{k+n−1}`.
#[derive(Debug, Clone)]
pub struct Microscope {
    pub k: usize,
    pub stages: Vec<MicroscopeStage>,
}

impl Microscope {
    /// Stages `k..k+n` of a Hénon tower solved through level `k + n`.
    pub fn from_tower(tower: &HenonTower, k: usize, n: usize) -> Result<Self> {
        let stages = (k..k + n)
            .map(|j| {
                let outer = *tower.params(j)?;
                let inner = *tower.params(j + 1)?;
                Ok(MicroscopeStage {
                    level: j,
                    lambda: inner.lambda / outer.lambda,
                    c: (inner.c - outer.c) / outer.lambda,
                    map: StageMap::Tower { tower: tower.clone(), outer, inner },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Microscope { k, stages })
    }

    /// Stages `k..k+n` along the orbit of `seed` under the series operator.
    pub fn from_operator(seed: &Pair2D, k: usize, n: usize) -> Result<Self> {
        let mut cur = seed.clone();
        let mut stages = Vec::with_capacity(n);
        for j in 0..k + n {
            let (next, tr) = renormalize2d_traced(&cur)?;
            if j >= k {
                stages.push(MicroscopeStage {
                    level: j,
                    lambda: C64::new(tr.lambda[0], tr.lambda[1]),
                    c: C64::new(tr.c_a[0], tr.c_a[1]),
                    map: StageMap::Operator { ax: cur.a.partial_x(), a: cur.a.clone() },
                });
            }
            cur = next;
        }
        Ok(Microscope { k, stages })
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn apply(&self, z: Point) -> Result<Point> {
        self.stages.iter().rev().try_fold(z, |z, s| s.apply(z))
    }

    pub fn differential(&self, z: Point) -> Result<Matrix2> {
        let mut d = [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]];
        let mut p = z;
        for s in self.stages.iter().rev() {
            d = matmul(&s.differential(p)?, &d);
            p = s.apply(p)?;
        }
        Ok(d)
    }
}

/// `D_k = [[1, s], [0, 1]]·diag(u, v)` at `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltDecomposition {
    pub level: usize,
    pub u: C64,
    pub v: C64,
    pub s: C64,
}

pub fn tilt_decomposition(m: &Microscope) -> Result<Vec<TiltDecomposition>> {
    m.stages
        .iter()
        .map(|st| {
            let d = st.differential((C64::new(1.0, 0.0), ZERO))?;
            let (u, v) = (d[0][0], d[1][1]);
            if u.norm() < 1e-300 || v.norm() < 1e-300 {
                return Err(Error::SingularJacobian);
            }
            Ok(TiltDecomposition { level: st.level, u, v, s: d[0][1] / v })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm2d::HenonMap;

    #[test]
    fn tower_differential_matches_finite_differences() {
        let t = HenonTower::new(HenonMap::golden(0.3).unwrap(), 3).unwrap();
        let m = Microscope::from_tower(&t, 0, 3).unwrap();
        let z = (C64::new(0.9, 0.05), C64::new(0.02, 0.0));
        for st in &m.stages {
            let d = st.differential(z).unwrap();
            let h = 1e-6;
            let fx = |dx: C64, dy: C64| st.apply((z.0 + dx, z.1 + dy)).unwrap();
            let ex = (fx(C64::new(h, 0.0), ZERO).0 - fx(C64::new(-h, 0.0), ZERO).0) / (2.0 * h);
            let ey = (fx(ZERO, C64::new(h, 0.0)).0 - fx(ZERO, C64::new(-h, 0.0)).0) / (2.0 * h);
            assert!((ex - d[0][0]).norm() < 1e-6 * (1.0 + ex.norm()), "{ex} {}", d[0][0]);
            assert!((ey - d[0][1]).norm() < 1e-5 * (1.0 + ey.norm()), "level {}: {ey} {}", st.level, d[0][1]);
        }
    }

    #[test]
    fn degenerate_stages_fix_the_anchor_and_have_no_tilt() {
        let t = HenonTower::new(HenonMap::golden(0.0).unwrap(), 4).unwrap();
        let m = Microscope::from_tower(&t, 0, 4).unwrap();
        let one = (C64::new(1.0, 0.0), ZERO);
        let z = m.apply(one).unwrap();
        assert!((z.0 - 1.0).norm() + z.1.norm() < 1e-8 * 4.0, "{z:?}");
        for td in tilt_decomposition(&m).unwrap() {
            assert!(td.s.norm() < 1e-10);
        }
    }
}
