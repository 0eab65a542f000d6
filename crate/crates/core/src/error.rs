//! Error type shared by every module.

/// Failure modes of the library. The CLI maps the first three to exit code 2
/// and the last two to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

impl Error {
    /// Process exit code associated with this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Precondition(_) | Error::Catalog(_) => 2,
            Error::Invariant(_) | Error::SearchExhausted(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Catalog(_) => "catalog",
            Error::Invariant(_) => "invariant",
            Error::SearchExhausted(_) => "search_exhausted",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn pre<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

pub(crate) fn breach<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invariant(msg.into()))
}
