//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset construction, model fitting, downstream tasks,
/// and persistence.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or vector had a different shape than the operation requires.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    /// A configuration value is outside its valid range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An input matrix that must be symmetric deviates beyond tolerance.
    #[error("input matrix is not symmetric: max |A - A^T| entry {max_dev:.3e} exceeds tolerance {tol:.3e}")]
    Asymmetric { max_dev: f64, tol: f64 },

    /// A non-finite value (NaN or infinity) appeared where finite data is required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    /// The fit diverged: loss or gradient became non-finite at the given
    /// outer iteration `k` and inner step `t` (both 1-based).
    #[error("divergent fit: non-finite {what} at outer iteration {k}, inner step {t}; try a smaller step size")]
    DivergentFit { what: &'static str, k: usize, t: usize },

    /// An iterative numerical routine failed to converge.
    #[error("numerical routine did not converge: {0}")]
    NoConvergence(String),

    /// The embedding matrix is identically zero, so subject embeddings are undefined.
    #[error("degenerate embedding: the fitted matrix has no nonzero rows")]
    DegenerateEmbedding,

    /// A model eigenvalue that must be positive is not.
    #[error("degenerate model: component {index} has non-positive scale {value:.3e}")]
    DegenerateModel { index: usize, value: f64 },

    /// Classifier training requires both classes in the label vector.
    #[error("classifier training needs both classes; labels are single-class")]
    SingleClass,

    /// A similarity-graph node has (numerically) zero degree.
    #[error("similarity graph has an isolated node: vertex {vertex} has degree {degree:.3e}")]
    IsolatedNode { vertex: usize, degree: f64 },

    /// Clustering produced an empty cluster even in the best restart.
    #[error("clustering produced an empty cluster (k = {k}, v = {v})")]
    EmptyCluster { k: usize, v: usize },

    /// Underlying I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON metadata or plan document.
    #[error("malformed JSON in {path}: {message}")]
    Json { path: String, message: String },

    /// Malformed CSV content.
    #[error("malformed CSV in {path}: {message}")]
    Csv { path: String, message: String },

    /// Persisted file was written by an incompatible schema version.
    #[error("schema version mismatch in {path}: found {found}, expected {expected}")]
    SchemaVersion {
        path: String,
        found: u32,
        expected: u32,
    },
}

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
