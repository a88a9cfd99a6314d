use thiserror::Error;

pub type Result<T> = std::result::Result<T, QfwError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QfwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objective has no exact gradient")]
    MissingGradient,

    #[error("empty domain")]
    EmptyDomain,

    #[error("starting point is not in the constraint set")]
    InfeasibleStart,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("spectral gap {gap:e} is below tolerance (sigma1 = {sigma1:e})")]
    DegenerateGap { sigma1: f64, gap: f64 },

    #[error("power-method chain norm collapsed to {0:e}")]
    ChainCollapse(f64),

    #[error("{0} cannot be enumerated by brute force")]
    NotEnumerable(String),
}

impl QfwError {
    /// True for errors caused by the numerical input handed to a solver
    /// rather than by a malformed request.
    pub fn is_degenerate_input(&self) -> bool {
        matches!(
            self,
            QfwError::DegenerateGap { .. }
                | QfwError::ChainCollapse(_)
                | QfwError::Precondition(_)
                | QfwError::InfeasibleStart
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QfwError::InvalidArgument(msg.into()))
}
