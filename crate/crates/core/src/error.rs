use thiserror::Error;

/// Errors reported by the engine and its components.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Caller broke an operation's contract (bad vertex, double delete, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// The graph contains a negative cycle.
    #[error("negative cycle detected")]
    NegativeCycle,
    /// Weight bound too large for exact perturbed arithmetic.
    #[error("configuration error: {0}")]
    Config(String),
    /// A path handle of a shape the operation does not support.
    #[error("unsupported path shape: {0}")]
    UnsupportedShape(String),
    /// Rebuild invariants still violated after all retries.
    #[error("rebuild failed: {0}")]
    RebuildFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
