use thiserror::Error;

/// Errors shared by the codecs, the container format and the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or truncated data found while decoding.
    #[error("corrupt stream at bit {bit}: {what}")]
    Corrupt { what: String, bit: usize },
    /// A value outside the domain of an operation.
    #[error("{0}")]
    Domain(String),
    /// An operation that does not apply to the given input.
    #[error("{0}")]
    Unsupported(String),
    /// An internal bookkeeping invariant failed; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn corrupt(bit: usize, what: impl Into<String>) -> Self {
        Error::Corrupt {
            what: what.into(),
            bit,
        }
    }

    pub fn is_corrupt(&self) -> bool {
        matches!(self, Error::Corrupt { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
