//! Truncated Taylor series on discs.
//!
//! [`Series1`] is a one-variable series `sum a_k (x - c)^k` on the disc of
//! radius `r` about `c`. [`Series2`] is the two-variable analogue on a
//! polydisc centred at `(c, 0)`. Norms are majorants `sum |a_k| r^k`, which
//! bound the sup norm on the closed disc.

mod one;
mod two;

pub use one::{compose1, compose1_with_slack, revert_about, revert_about_with_radius, Series1};
pub use two::{compose2, compose2_with_slack, Series2};

/// Relative slack allowed when an inner majorant overshoots the outer radius.
pub const DEFAULT_DOMAIN_SLACK: f64 = 0.4;
