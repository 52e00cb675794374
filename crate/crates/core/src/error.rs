use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    /// Rejection sampling could not place a node within the attempt budget.
    #[error("could not place {what} after {attempts} attempts")]
    PlacementFailed { what: String, attempts: usize },

    /// An exhaustive enumeration would exceed its configured bound.
    #[error("enumeration bound exceeded: {0}")]
    BoundExceeded(String),

    #[error("missing pairwise table for clients ({0}, {1})")]
    MissingPair(usize, usize),

    #[error("unsupported schema version {found} (expected {expected})")]
    Schema { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error document and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidTopology(_) => "invalid_topology",
            Error::PlacementFailed { .. } => "placement_failed",
            Error::BoundExceeded(_) => "bound_exceeded",
            Error::MissingPair(..) => "missing_pair",
            Error::Schema { .. } => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
