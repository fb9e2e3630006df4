use thiserror::Error;

/// Coarse failure classes. They drive CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    Usage,
    Data,
    Model,
    Numerical,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Model => 4,
            ErrorCategory::Numerical => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Data => "data",
            ErrorCategory::Model => "model",
            ErrorCategory::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter outside the model domain: {0}")]
    Domain(String),
    #[error("observation outside the model support: {0}")]
    Support(String),
    #[error("design matrix is singular (smallest eigenvalue {min_eig:e})")]
    SingularDesign { min_eig: f64 },
    #[error("design matrix has no rows")]
    EmptyDesign,
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPd { min_eig: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("sample covariance is not positive definite")]
    NonPdCovariance,
    #[error("estimator failed to converge after {max_iter} iterations in every restart")]
    NoConvergence { max_iter: usize },
    #[error("logistic likelihood has no finite maximizer (separated data)")]
    Separation,
    #[error("need at least {needed} draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },
    #[error("draws have zero spread")]
    DegenerateDraws,
    #[error("need at least {needed} chains, got {got}")]
    InsufficientChains { needed: usize, got: usize },
    #[error("model `{0}` has no analytic moment bound")]
    NoBoundAvailable(String),
    #[error("batch failed: {aborted} of {total} chains aborted ({reason})")]
    BatchFailed {
        aborted: usize,
        total: usize,
        reason: String,
    },
    #[error("experiment failed: {failed} of {total} repeats errored (first: {first})")]
    ExperimentFailed {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            Config(_) => ErrorCategory::Usage,
            Data(_) | Io(_) | Csv(_) | EmptyDesign | InsufficientData(_) | Support(_) => {
                ErrorCategory::Data
            }
            Domain(_) | NoBoundAvailable(_) => ErrorCategory::Model,
            SingularDesign { .. }
            | NotPd { .. }
            | NonPdCovariance
            | NoConvergence { .. }
            | Separation
            | InsufficientDraws { .. }
            | DegenerateDraws
            | InsufficientChains { .. }
            | BatchFailed { .. }
            | ExperimentFailed { .. } => ErrorCategory::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
