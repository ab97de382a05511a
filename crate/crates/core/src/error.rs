use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The CLI maps these onto exit codes: parameter problems are validation
/// errors, everything that happens after a valid model was built is numerical.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{operation} requires {requirement}")]
    WrongVariant {
        operation: &'static str,
        requirement: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hot and cold partition functions coincide (Z_H = Z_C = {0}); no thermal gradient to drive the machine")]
    DegenerateGradient(f64),

    #[error("cycle hazard {cycle_hazard:e} is below the resolvable threshold; the clock effectively never ticks (R -> 0)")]
    DegenerateProfile { cycle_hazard: f64 },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value:e} with error {error:e}")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    },

    #[error("oracle Hilbert space of dimension {required} exceeds the dense limit of {limit}")]
    OracleTooLarge { required: u128, limit: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("sample statistics degenerate: {0}")]
    DegenerateSample(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl ClockError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        ClockError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ClockError::InvalidParameter { .. }
                | ClockError::WrongVariant { .. }
                | ClockError::Domain(_)
                | ClockError::DegenerateGradient(_)
                | ClockError::OracleTooLarge { .. }
                | ClockError::Config(_)
        )
    }
}

impl From<std::io::Error> for ClockError {
    fn from(err: std::io::Error) -> Self {
        ClockError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ClockError>;
