use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("integration diverged at t = {t} (|x| = {norm:.3e})")]
    Divergence { t: f64, norm: f64 },
    #[error("system is unstable (max Re λ = {0:.3e})")]
    Unstable(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error("checksum mismatch in {0}")]
    Checksum(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("stage '{stage}' failed: {source}")]
    Stage { stage: String, source: Box<Error> },
    #[error("missing artifacts: {}", .0.join(", "))]
    Missing(Vec<String>),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for errors caused by bad input rather than numerics.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
