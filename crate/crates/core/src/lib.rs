//! Numerical renormalization toolkit for golden-mean Siegel Hénon maps.
//!
//! Modules, bottom up: [`f128`] and [`scalar`] for arithmetic, [`jet`] and
//! [`series`] for truncated Taylor objects, [`goldenrot`] for the rigid
//! rotation combinatorics, [`renorm1d`] for the commuting-pair operator and
//! its fixed point, [`renorm2d`] for the two-dimensional operator and the
//! Hénon renormalization tower, and [`arclab`] for arcs, Jacobian averages
//! and universality measurements.

pub mod arclab;
pub mod artifact;
pub mod error;
pub mod f128;
pub mod goldenrot;
pub mod jet;
pub mod renorm1d;
pub mod renorm2d;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use scalar::{Precision, Scalar, C128, C64};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
