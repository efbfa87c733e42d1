use thiserror::Error;

/// Errors shared across the certification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated an operation's precondition (non-positive scale,
    /// zero dimension, empty sample budget, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector/matrix shapes do not chain.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A divergence was requested for distributions where it is undefined
    /// (P puts mass where Q has none).
    #[error("divergence undefined: {0}")]
    DivergenceUndefined(String),

    /// Degenerate probability input, e.g. a runner-up probability of zero
    /// fed to the Renyi bound without flooring.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Mechanism/norm pairing with no supported radius formula.
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    /// Model file failed to load or validate.
    #[error("model file {path}: {message}")]
    ModelFile { path: String, message: String },

    /// Dataset or records file failed to parse; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A classifier evaluation failed for a specific Monte Carlo draw.
    #[error("classifier evaluation failed at draw {draw}: {source}")]
    DrawFailed {
        draw: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
