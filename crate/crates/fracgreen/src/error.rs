use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes: configuration
/// and precondition problems exit 1, failed certifications exit 2, numerical
/// divergence (non-converging quadrature or iteration) exits 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    #[error("evaluation failed to converge: {0}")]
    Divergence(String),

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("insufficient sample count: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the thin CLI binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Precondition(_) | Error::Io(_) | Error::Json(_) => 1,
            Error::CertificationFailed(_) => 2,
            Error::Divergence(_) => 3,
            Error::UnsupportedRegion(_) | Error::SingularPoint(_) => 1,
            Error::InsufficientSamples { .. } => 1,
        }
    }
}
