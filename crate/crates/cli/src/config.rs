//! Run configuration: defaults, command-line flags, then an optional TOML file.
//! Values in the file take precedence over flags.

use crate::Failure;
use clap::{Args, ValueEnum};
use renorm_core::renorm1d::Domains;
use renorm_core::Precision;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Degree of the 1D series.
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Dissipation ν of the Hénon map.
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    /// First map of a Hölder comparison.
    #[arg(long, global = true)]
    pub nu1: Option<f64>,
    /// Second map of a Hölder comparison.
    #[arg(long, global = true)]
    pub nu2: Option<f64>,
    /// Renormalization level.
    #[arg(long, global = true)]
    pub level: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fixed-point artifact (default: <out>/fixedpoint.json).
    #[arg(long, global = true)]
    pub fp: Option<PathBuf>,
    /// Krylov dimension for the spectrum.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// TOML file whose values override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub defect_tol: f64,
    pub deriv_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { newton_tol: 1e-11, defect_tol: 1e-9, deriv_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Degrees2d {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Degrees2d {
    fn default() -> Self {
        Degrees2d { nx: 80, ny: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub degree_1d: usize,
    pub degrees_2d: Degrees2d,
    pub radii: Domains,
    pub tolerances: Tolerances,
    pub precision: Precision,
    pub nu: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub level: usize,
    pub max_level: usize,
    pub spectrum_dim: usize,
    pub out: PathBuf,
    pub fp: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            degree_1d: 80,
            degrees_2d: Degrees2d::default(),
            radii: Domains::default(),
            tolerances: Tolerances::default(),
            precision: Precision::Double,
            nu: 0.2,
            nu1: 0.3,
            nu2: 0.1,
            level: 6,
            max_level: 12,
            spectrum_dim: 40,
            out: PathBuf::from("out"),
            fp: None,
        }
    }
}

/// The subset of [`RunConfig`] a TOML file may set.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    degree_1d: Option<usize>,
    degrees_2d: Option<Degrees2d>,
    radii: Option<Domains>,
    tolerances: Option<Tolerances>,
    precision: Option<Precision>,
    nu: Option<f64>,
    nu1: Option<f64>,
    nu2: Option<f64>,
    level: Option<usize>,
    max_level: Option<usize>,
    spectrum_dim: Option<usize>,
    out: Option<PathBuf>,
    fp: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> Result<Self, Failure> {
        let mut c = RunConfig::default();
        c.apply_flags(flags);
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            c.apply_file(&text)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn apply_flags(&mut self, f: &Overrides) {
        if let Some(v) = f.degree {
            self.degree_1d = v;
        }
        if let Some(v) = f.nu {
            self.nu = v;
        }
        if let Some(v) = f.nu1 {
            self.nu1 = v;
        }
        if let Some(v) = f.nu2 {
            self.nu2 = v;
        }
        if let Some(v) = f.level {
            self.level = v;
        }
        if let Some(p) = f.precision {
            self.precision = match p {
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::Extended => Precision::Extended,
            };
        }
        if let Some(v) = &f.out {
            self.out = v.clone();
        }
        if let Some(v) = &f.fp {
            self.fp = Some(v.clone());
        }
        if let Some(v) = f.dim {
            self.spectrum_dim = v;
        }
    }

    pub fn apply_file(&mut self, text: &str) -> Result<(), Failure> {
        let f: FileConfig = toml::from_str(text).map_err(|e| Failure::Config(format!("config: {e}")))?;
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = f.$field { self.$field = v; })* };
        }
        take!(degree_1d, degrees_2d, radii, tolerances, precision, nu, nu1, nu2, level, max_level, spectrum_dim, out);
        if f.fp.is_some() {
            self.fp = f.fp;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Config(m));
        let t = &self.tolerances;
        for (name, v) in [("newton_tol", t.newton_tol), ("defect_tol", t.defect_tol), ("deriv_tol", t.deriv_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if self.max_level > 12 {
            return bad(format!("max_level {} exceeds 12", self.max_level));
        }
        if self.level > self.max_level {
            return bad(format!("level {} exceeds the budget {}", self.level, self.max_level));
        }
        for (name, v) in [("nu", self.nu), ("nu1", self.nu1), ("nu2", self.nu2)] {
            if !(v.abs() < 1.0) {
                return bad(format!("|{name}| = {} must be below 1", v.abs()));
            }
        }
        if self.degree_1d < 8 || self.degrees_2d.nx < 8 || self.degrees_2d.ny < 1 {
            return bad("series degrees are too small".into());
        }
        let r = &self.radii;
        if !(r.r_z > 0.0 && r.r_w > 0.0) {
            return bad("radii must be positive".into());
        }
        if self.spectrum_dim == 0 {
            return bad("spectrum dimension must be positive".into());
        }
        Ok(())
    }

    pub fn fp_path(&self) -> PathBuf {
        self.fp.clone().unwrap_or_else(|| self.out.join("fixedpoint.json"))
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_flags() {
        let flags = Overrides { nu: Some(0.1), level: Some(3), ..Default::default() };
        let mut c = RunConfig::default();
        c.apply_flags(&flags);
        c.apply_file("nu = 0.3\n[tolerances]\nnewton_tol = 1e-10\n").unwrap();
        assert_eq!(c.nu, 0.3);
        assert_eq!(c.level, 3);
        assert_eq!(c.tolerances.newton_tol, 1e-10);
        assert_eq!(c.tolerances.deriv_tol, 1e-8);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = RunConfig::default();
        c.level = 13;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.nu = 1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.tolerances.newton_tol = 0.0;
        assert!(c.validate().is_err());
        assert!(RunConfig::default().apply_file("unknown = 1").is_err());
    }
}
