use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("load error at row {row}, column '{column}': {message}")]
    Load {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("degenerate neighborhood at point {point}: {nonzero} nonzero weights")]
    DegenerateNeighborhood { point: usize, nonzero: usize },

    #[error("empty neighborhood: all weights are zero")]
    EmptyNeighborhood,

    #[error("singular fit: weighted normal equations are not invertible")]
    SingularFit,

    #[error("enumeration limit: {features} features exceeds the exact Shapley limit of {limit}")]
    EnumerationLimit { features: usize, limit: usize },

    #[error("partial dependence grid has a single point for feature {0}")]
    SinglePointGrid(usize),

    #[error("too many per-point failures: {failed} of {total} points")]
    TooManyFailures { failed: usize, total: usize },

    #[error("bandwidth scan failed for every grid value")]
    ScanFailed,

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite values for ids: {0}")]
    NonFinite(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDataset(_)
                | Error::Load { .. }
                | Error::MissingColumn(_)
                | Error::InvalidArgument(_)
                | Error::Config(_)
                | Error::Io { .. }
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
