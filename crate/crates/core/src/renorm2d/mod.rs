//! Two-dimensional renormalization of Hénon-like pairs.
//!
//! A pair `Σ = (A, B)` has the structural form `A = (a, h)`, `B = (b, x)`,
//! with `a`, `h` expanded on `Ω = Z × U` and `b` on `Γ = W × V`.
//!
//! Two constructions live here. [`renormalize2d`] is the series operator
//! `𝐑 = Π∘𝐑̃`, used near the degenerate fixed point `ι(ζ*)`. [`HenonTower`]
//! builds the renormalizations of a Hénon map directly from iterates of the
//! map, which keeps every level exact up to truncation and precision.

mod map;
mod microscope;
mod operator;
mod pair;
mod tower;

pub use map::{HenonMap, ScaledMap};
pub use microscope::{tilt_decomposition, Matrix2, Microscope, MicroscopeStage, TiltDecomposition};
pub use operator::{
    embed_1d, prerenorm2d, project_ac, recenter_rescale, renormalize2d, renormalize2d_traced, restrict_1d, straighten,
    PreRenorm2D, Projected, Recentered, Straightened, TraceLevel,
};
pub use pair::{henon_pair, Frames2, Pair2D, Point};
pub use tower::{HenonTower, LevelParams};

/// y-radius of the polydiscs used for compositions in the operator.
pub const Y_RADIUS: f64 = 1.25;
/// y-radius at which `‖Σ‖_y` is measured.
pub const Y_NORM_RADIUS: f64 = 0.3;
/// Below this y-norm the tower recomputes a level in extended precision.
pub const EXTENDED_THRESHOLD: f64 = 1e-12;
