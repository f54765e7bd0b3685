use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants map onto the command-line exit codes: input and parameter
/// problems exit with 2, infeasible or unbounded problems with 3, and
/// numerical failures with 4.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value: {0}")]
    Evaluation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem too large: {0}")]
    TooLarge(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_)
            | Error::Dimension { .. }
            | Error::Domain(_)
            | Error::Parameter(_)
            | Error::Unsupported(_)
            | Error::TooLarge(_) => 2,
            Error::Infeasible(_) | Error::Unbounded(_) => 3,
            Error::Evaluation(_) | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
