use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{LadderViolation, SeriesMismatch};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("row {row}, column `{column}`: {reason}")]
    InvalidValue {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("length mismatch ({got} vs {expected})")]
    LengthMismatch { got: usize, expected: usize },

    #[error(transparent)]
    Misaligned(#[from] SeriesMismatch),

    #[error("invalid price set: {0}")]
    Ladder(#[from] LadderViolation),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pv-to-ev flow {pv2ev_kw} kW exceeds available prosumer surplus {surplus_kw} kW")]
    Attribution { pv2ev_kw: f64, surplus_kw: f64 },

    #[error("cannot emit an empty sweep grid")]
    EmptyGrid,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
