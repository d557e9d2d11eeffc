use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto process exit codes: input-side failures
/// (`DimensionMismatch`, `InvalidInput`, `Io`) are data errors, while
/// `Solver`, `Numerical`, `DegeneratePlan` and `Integration` are numerical
/// failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate transport plan: {0}")]
    DegeneratePlan(String),

    #[error("ODE integration failed at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error stems from user-supplied data rather than from
    /// the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Parse { .. }
        )
    }
}
