use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants split into two families: validation errors (bad input) and
/// numerical errors (an algorithm failed on valid input). The CLI maps the
/// first family to exit code 2 and the second to exit code 3.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("fibonacci index {0} overflows u64 (max 90)")]
    FibonacciOverflow(usize),
    #[error("level {level} exceeds the budget {max}")]
    LevelBudget { level: usize, max: usize },
    #[error("non-positive length after {step} prerenormalization step(s)")]
    NonPositiveLength { step: usize },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("invalid jacobian: {0}")]
    InvalidJacobian(String),

    #[error("composition leaves the domain: reach {reach:.6e} exceeds radius {radius:.6e}")]
    DomainEscape { reach: f64, radius: f64 },
    #[error("derivative {modulus:.3e} at the expansion centre is too small to invert")]
    CriticalCenter { modulus: f64 },
    #[error("scaling factor {modulus:.3e} is numerically zero")]
    ZeroScaling { modulus: f64 },
    #[error("no critical point found within the rejection radius")]
    NoCriticalPoint,
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("singular jacobian in Newton solve")]
    SingularJacobian,
    #[error("singular correction system (determinant {det:.3e})")]
    SingularCorrection { det: f64 },
    #[error("quadrature failed to reach tolerance on [{left}, {right}]")]
    QuadratureFailure { left: f64, right: f64 },
    #[error("jacobian vanishes numerically ({modulus:.3e})")]
    ZeroJacobian { modulus: f64 },
    #[error("signal {signal:.3e} below noise floor {floor:.3e} at level {level}")]
    SignalBelowNoise { level: usize, signal: f64, floor: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::FibonacciOverflow(_)
                | Error::LevelBudget { .. }
                | Error::NonPositiveLength { .. }
                | Error::MissingArtifact(_)
                | Error::InvalidJacobian(_)
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "Validation",
            Error::FibonacciOverflow(_) => "FibonacciOverflow",
            Error::LevelBudget { .. } => "LevelBudget",
            Error::NonPositiveLength { .. } => "NonPositiveLength",
            Error::MissingArtifact(_) => "MissingArtifact",
            Error::InvalidJacobian(_) => "InvalidJacobian",
            Error::DomainEscape { .. } => "DomainEscape",
            Error::CriticalCenter { .. } => "CriticalCenter",
            Error::ZeroScaling { .. } => "ZeroScaling",
            Error::NoCriticalPoint => "NoCriticalPoint",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularJacobian => "SingularJacobian",
            Error::SingularCorrection { .. } => "SingularCorrection",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::ZeroJacobian { .. } => "ZeroJacobian",
            Error::SignalBelowNoise { .. } => "SignalBelowNoise",
            Error::NonFinite(_) => "NonFinite",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
