use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A prime-table query past the sieved limit.
    #[error("query {query} is out of range: table limit is {limit}")]
    OutOfRange { query: u64, limit: u64 },
    /// An analytic bound invoked outside its range of validity.
    #[error("range error: {0}")]
    Range(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A lemma hypothesis that fails arithmetically (e.g. m*1476 > 2^(K-2)).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// A certified inequality that did not hold; carries the witness.
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    /// A request that would blow up combinatorially.
    #[error("refused: {0}")]
    Refused(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
