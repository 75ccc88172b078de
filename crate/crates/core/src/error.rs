use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters or inconsistent inputs.
    Usage,
    /// Files that cannot be read, written or parsed.
    Io,
    /// Numerically degenerate problems (singular kernels, divergence).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} is outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("image sides must be powers of two, got {n1}x{n2}")]
    NotDyadic { n1: usize, n2: usize },

    #[error("unknown test function `{0}` (expected f1, f2, f3 or f4)")]
    UnknownFunction(String),

    #[error("singular Toeplitz operator: diagonal entry g_0 = {diag}")]
    SingularOperator { diag: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {estimate})"
    )]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain { .. }
            | Error::InvalidParameter(_)
            | Error::LengthMismatch { .. }
            | Error::ShapeMismatch(_)
            | Error::NotDyadic { .. }
            | Error::UnknownFunction(_) => ErrorClass::Usage,
            Error::SingularOperator { .. } | Error::NoConvergence { .. } | Error::Degenerate(_) => {
                ErrorClass::Numeric
            }
            Error::Format(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => ErrorClass::Io,
        }
    }
}
