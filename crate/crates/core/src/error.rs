use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The eigensolver or a Newton iteration did not reach its tolerance.
    #[error("solver did not converge: {message} (best residuals {residuals:?})")]
    Solver {
        message: String,
        residuals: Vec<f64>,
    },

    #[error("measure cannot be balanced: center of mass norm {norm} exceeds {limit}")]
    BalanceInfeasible { norm: f64, limit: f64 },

    #[error("certificate residual {residual} is above the usable limit {limit}")]
    CertificateUnusable { residual: f64, limit: f64 },

    #[error("checksum mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
