//! JSON artifacts exchanged between commands.
//!
//! Every artifact carries `schema_version`. Floats are written with
//! round-trip precision, so reading an artifact back reproduces it bit for bit.

use crate::arclab::{HolderReport, JacobianProfile, UniversalityReport};
use crate::error::{Error, Result};
use crate::renorm1d::{Domains, FixedPoint, Pair1D, SpectrumReport};
use crate::renorm2d::TraceLevel;
use crate::scalar::C64;
use crate::series::Series1;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn complex(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// `fixedpoint.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointArtifact {
    pub schema: u32,
    pub schema_version: u32,
    pub degree: usize,
    pub r_z: f64,
    pub r_w: f64,
    pub c_z: [f64; 2],
    pub c_w: [f64; 2],
    pub lambda: [f64; 2],
    pub eta: Vec<[f64; 2]>,
    pub xi: Vec<[f64; 2]>,
    pub residual: f64,
}

impl FixedPointArtifact {
    pub fn from_fixed_point(fp: &FixedPoint) -> Self {
        let z = &fp.zstar;
        let d = z.domains();
        FixedPointArtifact {
            schema: SCHEMA_VERSION,
            schema_version: SCHEMA_VERSION,
            degree: z.degree(),
            r_z: d.r_z,
            r_w: d.r_w,
            c_z: pair(d.c_z),
            c_w: pair(d.c_w),
            lambda: pair(fp.lambda),
            eta: z.eta.coeffs().iter().map(|&c| pair(c)).collect(),
            xi: z.xi.coeffs().iter().map(|&c| pair(c)).collect(),
            residual: fp.residual,
        }
    }

    pub fn domains(&self) -> Domains {
        Domains { c_z: complex(self.c_z), r_z: self.r_z, c_w: complex(self.c_w), r_w: self.r_w }
    }

    pub fn to_pair(&self) -> Result<Pair1D> {
        if self.eta.len() != self.degree + 1 || self.xi.len() != self.degree + 1 {
            return Err(Error::Validation("coefficient count does not match degree".into()));
        }
        let d = self.domains();
        let eta = Series1::new(self.eta.iter().map(|&p| complex(p)).collect(), d.c_z, d.r_z)?;
        let xi = Series1::new(self.xi.iter().map(|&p| complex(p)).collect(), d.c_w, d.r_w)?;
        Ok(Pair1D::new(eta, xi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArtifact {
    pub schema_version: u32,
    pub degree: usize,
    pub dim: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub moduli: Vec<f64>,
    pub expanding_count: usize,
    pub base_residual: f64,
}

impl SpectrumArtifact {
    pub fn new(degree: usize, dim: usize, r: &SpectrumReport) -> Self {
        SpectrumArtifact {
            schema_version: SCHEMA_VERSION,
            degree,
            dim,
            eigenvalues: r.eigenvalues.iter().map(|&z| pair(z)).collect(),
            moduli: r.eigenvalues.iter().map(|z| z.norm()).collect(),
            expanding_count: r.expanding_count,
            base_residual: r.base_residual,
        }
    }
}

/// `trace.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceArtifact {
    pub schema_version: u32,
    pub nu: f64,
    /// `‖Σ_n‖_y` for the Hénon tower, level by level.
    pub y_norms: Vec<f64>,
    /// Precision used for each y-norm.
    pub precisions: Vec<String>,
    pub levels: Vec<TraceLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianArtifact {
    pub schema_version: u32,
    pub nu: f64,
    pub level: usize,
    pub avg_jacobian: [f64; 2],
    pub closed_form: [f64; 2],
    pub per_level: Vec<JacobianRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianRecord {
    pub n: usize,
    pub q2n: u64,
    pub jac_at_witness: [f64; 2],
    pub c_n_estimate: [f64; 2],
    pub distortion: f64,
}

impl JacobianArtifact {
    pub fn new(nu: f64, level: usize, closed_form: C64, p: &JacobianProfile) -> Self {
        JacobianArtifact {
            schema_version: SCHEMA_VERSION,
            nu,
            level,
            avg_jacobian: pair(p.avg_jacobian),
            closed_form: pair(closed_form),
            per_level: p
                .per_level
                .iter()
                .map(|l| JacobianRecord {
                    n: l.n,
                    q2n: l.q2n,
                    jac_at_witness: pair(l.jac_at_witness),
                    c_n_estimate: pair(l.c_n_estimate),
                    distortion: l.distortion,
                })
                .collect(),
        }
    }
}

/// `universality.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityArtifact {
    pub schema_version: u32,
    pub nu: f64,
    pub grid: Vec<f64>,
    pub x0: f64,
    pub log_b_sigma: f64,
    pub dev_ratios: Vec<f64>,
    pub levels: Vec<UniversalityRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityRecord {
    pub n: usize,
    pub q2n: u64,
    pub e_n_at_grid: Vec<[f64; 2]>,
    pub slope: f64,
    pub alpha_dev: f64,
    pub alpha_hat: Vec<[f64; 2]>,
    pub distortion: f64,
    pub below_noise: bool,
}

impl UniversalityArtifact {
    pub fn new(nu: f64, r: &UniversalityReport) -> Self {
        UniversalityArtifact {
            schema_version: SCHEMA_VERSION,
            nu,
            grid: r.grid.clone(),
            x0: r.x0,
            log_b_sigma: r.log_b_sigma,
            dev_ratios: r.dev_ratios.clone(),
            levels: r
                .levels
                .iter()
                .map(|l| UniversalityRecord {
                    n: l.n,
                    q2n: l.q2n,
                    e_n_at_grid: l.e_n_at_grid.iter().map(|&z| pair(z)).collect(),
                    slope: r.slope,
                    alpha_dev: l.alpha_dev,
                    alpha_hat: l.alpha_hat.iter().map(|&z| pair(z)).collect(),
                    distortion: l.distortion,
                    below_noise: l.below_noise,
                })
                .collect(),
        }
    }
}

/// `holder.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderArtifact {
    pub schema_version: u32,
    pub nu1: f64,
    pub nu2: f64,
    pub level: usize,
    pub alpha_hat: f64,
    pub bound: f64,
    pub binding: bool,
    pub within_bound: bool,
    pub pairs_used: usize,
}

impl HolderArtifact {
    pub fn new(nu1: f64, nu2: f64, level: usize, r: &HolderReport) -> Self {
        HolderArtifact {
            schema_version: SCHEMA_VERSION,
            nu1,
            nu2,
            level,
            alpha_hat: r.alpha_hat,
            bound: r.bound,
            binding: r.binding,
            within_bound: r.within_bound,
            pairs_used: r.pairs_used,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Validation(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed artifact: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Validation(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, to_json(value)?).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
    from_json(&text)
}
