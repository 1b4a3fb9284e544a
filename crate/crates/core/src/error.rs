use thiserror::Error;

pub type Result<T> = std::result::Result<T, RmmError>;

/// Coarse error classes, used by callers (the CLI in particular) to pick an
/// exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input layout or invalid arguments.
    Schema,
    /// Input parsed but violates a data contract.
    Validation,
    /// Numerical failure during estimation.
    Numeric,
    /// Filesystem or serialization failure.
    Io,
}

#[derive(Debug, Error)]
pub enum RmmError {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid value at row {row}: {message}")]
    InvalidValue { row: usize, message: String },

    #[error("duplicate row for id `{id}` and alternative `{alternative}`")]
    Duplicate { id: String, alternative: String },

    #[error("malformed choice set `{input}`: bad token `{token}`")]
    ChoiceSetParse { input: String, token: String },

    #[error("inconsistent data: {0}")]
    Consistency(String),

    #[error("no remaining choice sets after filtering")]
    EmptyDataset,

    #[error("missing alternative-specific value `{asv}` for id `{id}`, alternative {code}")]
    Incomplete { id: String, code: u32, asv: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state error: {0}")]
    State(String),

    #[error("non-finite value at record {record}: {message}")]
    NonFinite { record: usize, message: String },

    #[error(
        "no convergence after {iterations} iterations (gradient max-norm {gradient_norm:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("rank-deficient information matrix: {direction} is not identified")]
    RankDeficient { direction: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<RmmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RmmError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            RmmError::MissingColumn(_)
            | RmmError::Domain(_)
            | RmmError::Unsupported(_)
            | RmmError::ChoiceSetParse { .. } => ErrorKind::Schema,
            RmmError::InvalidValue { .. }
            | RmmError::Duplicate { .. }
            | RmmError::Consistency(_)
            | RmmError::EmptyDataset
            | RmmError::Incomplete { .. }
            | RmmError::State(_) => ErrorKind::Validation,
            RmmError::NonFinite { .. }
            | RmmError::NonConvergence { .. }
            | RmmError::RankDeficient { .. } => ErrorKind::Numeric,
            RmmError::Stage { source, .. } => source.kind(),
            RmmError::Io(_) | RmmError::Json(_) => ErrorKind::Io,
            RmmError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(_) => ErrorKind::Io,
                _ => ErrorKind::Schema,
            },
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        RmmError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage tags.
    pub fn root(&self) -> &RmmError {
        match self {
            RmmError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
