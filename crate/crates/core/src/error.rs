use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An index or window fell outside the addressable range.
    #[error("range error: {0}")]
    Range(String),

    /// Input had too few samples, rows or features for the operation.
    #[error("size error: {0}")]
    Size(String),

    /// Dimensions of two inputs do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Malformed textual input (INP, CSV, JSON).
    #[error("format error: {0}")]
    Format(String),

    /// A referenced node, edge or sensor does not exist.
    #[error("reference error: {0}")]
    Reference(String),

    /// A value violates its domain (non-positive length, bad factor, ...).
    #[error("value error: {0}")]
    Value(String),

    /// A linear system could not be solved.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Feature expansion exceeded the configured cap.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Caller broke an API contract (model/task mismatch, sensor not in S, ...).
    #[error("contract error: {0}")]
    Contract(String),

    /// Metric is undefined for the given input (e.g. single-class AUC).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// The graph is not connected.
    #[error("connectivity error: {0}")]
    Connectivity(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
