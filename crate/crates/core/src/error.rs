use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Entries are negative, non-finite, or do not sum to one.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("duplicate axis label `{0}`")]
    DuplicateAxis(String),
    #[error("axis sets overlap on `{0}`")]
    OverlappingAxes(String),
    #[error("empty axis set")]
    EmptyAxes,
    /// A tensor or enumeration would exceed a configured size limit.
    #[error("{what} needs {required} entries, exceeding the budget of {budget}")]
    Budget { what: String, required: u128, budget: u128 },
    /// The corollary solver requires a more capable channel.
    #[error("channel is not more capable: min I(X;Y) - I(X;Z) = {margin:.6e} bits at P_X = {minimizer:?}")]
    NotMoreCapable { margin: f64, minimizer: Vec<f64> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn budget(what: impl Into<String>, required: u128, budget: u128) -> Self {
        Error::Budget {
            what: what.into(),
            required,
            budget,
        }
    }
}
