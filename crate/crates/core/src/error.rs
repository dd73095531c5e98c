use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by data handling and every predictor in the crate.
#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("bag is empty")]
    EmptyBag,

    #[error("predictor has not been trained")]
    Untrained,

    #[error("predictor has not been calibrated")]
    Uncalibrated,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("label `{0}` is not part of the label space")]
    UnknownLabel(String),

    #[error("expected a {expected} bag")]
    WrongLabelKind { expected: &'static str },

    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not enough neighbours for {group}: need {needed}, have {available}")]
    NotEnoughNeighbours {
        group: String,
        needed: usize,
        available: usize,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}, column `{column}`: {message}")]
    CsvCell {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ConformalError> = std::result::Result<T, E>;
