//! Crate-wide error type; variants map onto the CLI exit codes.

use thiserror::Error;

/// Error variants for the whole pipeline.
///
/// The CLI maps these to distinct exit codes: configuration problems (2),
/// invalid input data (3), failure of the asymptotic-constancy assumption
/// on the Scorer parameter (4), and numerical non-convergence (5).
#[derive(Debug, Error)]
pub enum LeewaveError {
    /// Malformed configuration: flags, config files, artifact headers.
    #[error("config error: {0}")]
    Config(String),
    /// Input data that fails validation: grids, profiles, parameter ranges.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The requirement that F settles to a positive constant aloft failed.
    #[error("asymptotic assumption violated: {0}")]
    AssumptionViolated(String),
    /// An iterative or adaptive numerical procedure failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, LeewaveError>;

impl LeewaveError {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            LeewaveError::Config(_) => 2,
            LeewaveError::InvalidInput(_) | LeewaveError::Io(_) => 3,
            LeewaveError::AssumptionViolated(_) => 4,
            LeewaveError::Numerical(_) => 5,
        }
    }
}
