//! Error type shared by the model and its numerical routines.

use std::error::Error;
use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, ModelError>;

/// Everything that can go wrong while building a model or evaluating it.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A parameter violates its documented range or a consistency rule.
    InvalidParameter {
        /// Name of the offending parameter.
        name: &'static str,
        /// Human-readable description of the violation.
        message: String,
    },
    /// The MGF/CGF was evaluated at or beyond the edge of its convergence
    /// strip `s < 1 / max(lambda)`.
    OutsideDomain {
        /// Requested evaluation point.
        s: f64,
        /// Open upper limit of the convergence strip.
        s_max: f64,
    },
    /// The quadratic form has no absolutely continuous distribution to work
    /// with (for example a zero diffuse component).
    DegenerateDistribution {
        /// Human-readable description of the degeneracy.
        message: String,
    },
    /// The saddle-point equation `K'(s) = q` could not be solved to the
    /// requested residual within the iteration budget.
    SaddleNotConverged {
        /// Point at which the solve was attempted.
        q: f64,
        /// Iterations spent before giving up.
        iterations: usize,
        /// Residual `|K'(s) - q|` at the last iterate.
        residual: f64,
    },
    /// Adaptive quadrature could not reach the requested accuracy.
    QuadratureFailed {
        /// Human-readable description of the failure.
        message: String,
    },
    /// Power iteration on a sampled channel did not converge.
    PowerIterationNotConverged {
        /// Iterations spent before giving up.
        iterations: usize,
    },
    /// An experiment configuration is inconsistent.
    InvalidConfig {
        /// Human-readable description of the inconsistency.
        message: String,
    },
    /// Reading or writing an artifact (e.g. a raw sample file) failed.
    Io {
        /// Human-readable description of the failure.
        message: String,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidParameter { name, message } => {
                write!(f, "invalid parameter `{name}`: {message}")
            }
            ModelError::OutsideDomain { s, s_max } => {
                write!(
                    f,
                    "MGF/CGF evaluated at s = {s}, outside the convergence strip s < {s_max}"
                )
            }
            ModelError::DegenerateDistribution { message } => {
                write!(f, "degenerate distribution: {message}")
            }
            ModelError::SaddleNotConverged {
                q,
                iterations,
                residual,
            } => {
                write!(
                    f,
                    "saddle-point solve at q = {q} stopped after {iterations} iterations \
                     with residual {residual:e}"
                )
            }
            ModelError::QuadratureFailed { message } => {
                write!(f, "quadrature failed: {message}")
            }
            ModelError::PowerIterationNotConverged { iterations } => {
                write!(
                    f,
                    "power iteration did not converge within {iterations} iterations"
                )
            }
            ModelError::InvalidConfig { message } => {
                write!(f, "invalid configuration: {message}")
            }
            ModelError::Io { message } => {
                write!(f, "i/o failure: {message}")
            }
        }
    }
}

impl Error for ModelError {}
