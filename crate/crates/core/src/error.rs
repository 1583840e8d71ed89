use thiserror::Error;

/// Errors raised by the library.
///
/// `Domain` errors describe invalid inputs or requests outside a size cap;
/// `Internal` errors mean a numerical identity that must hold did not.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{code}: {detail}")]
    Domain { code: &'static str, detail: String },
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn domain(code: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            code,
            detail: detail.into(),
        }
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Error::Internal(detail.into())
    }

    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { code, .. } => code,
            Error::Internal(_) => "INTERNAL_CONSISTENCY",
        }
    }

    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub const DOMAIN: &str = "DOMAIN";
pub const SIZE_CAP: &str = "SIZE_CAP";
pub const ARITY_MISMATCH: &str = "ARITY_MISMATCH";
pub const INFINITE_EMBEDDING: &str = "INFINITE_EMBEDDING";
pub const PARSE: &str = "PARSE";
pub const IO: &str = "IO";
pub const USAGE: &str = "USAGE";
pub const MISSING_SEED: &str = "MISSING_SEED";
