use thiserror::Error;

use crate::ingestion::DroppedRow;
use crate::selection::AttributeReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid tile: {0}")]
    InvalidTile(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: (usize, usize), actual: (usize, usize) },

    #[error("enumeration too large: {count} permutation vectors exceed the cap of {cap}")]
    TooLarge { count: f64, cap: u64 },

    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),

    #[error("degenerate direction: u'Σ2u = {0:e} is below the floor")]
    DegenerateDirection(f64),

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("selection too small: {0} rows (need at least 2)")]
    SelectionTooSmall(usize),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("no column has a std ratio below tau = {tau}")]
    EmptyTile { tau: f64, report: Box<AttributeReport> },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("no hypothesis set")]
    NoHypothesis,

    #[error("malformed history event at offset {offset}: {reason}")]
    MalformedEvent { offset: usize, reason: String },

    #[error("ingestion failed: {0}")]
    Ingestion(String),

    #[error("every data row was rejected ({} rows)", rows.len())]
    RowsRejected { rows: Vec<DroppedRow> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
