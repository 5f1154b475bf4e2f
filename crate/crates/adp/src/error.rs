//! Crate-wide error type.

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A scatterer was placed outside the profile's range extent.
    #[error("scatterer cell {cell} out of range for {num_cells} range cells")]
    ScattererOutOfRange { cell: usize, num_cells: usize },

    /// Episode sampling needs more samples of `class` than the dataset has.
    #[error("dataset too small: class '{class}' has {available} samples but the episode needs {needed}")]
    DatasetTooSmall {
        class: String,
        available: usize,
        needed: usize,
    },

    /// No candidate class could be recovered from a model response. The
    /// caller records this as an abstention; it is never mapped to a class.
    #[error("unparseable verdict: no candidate class found in response")]
    UnparseableVerdict { response: String },

    /// The remote endpoint failed after all retries, or is misconfigured.
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    /// Replay mode requires every prompt digest to be cached.
    #[error("replay cache miss for prompt digest {digest}")]
    ReplayCacheMiss { digest: String },

    /// A persisted file violates its schema; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    FileParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
