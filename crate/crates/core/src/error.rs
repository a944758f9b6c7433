use thiserror::Error;

use crate::surv::CoxFit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {column} is constant or has fewer than two observed values")]
    ConstantColumn { column: usize },

    #[error("monotone likelihood: partial likelihood diverged after {} iterations", .last.iterations)]
    MonotoneLikelihood { last: Box<CoxFit> },

    #[error("singular information matrix")]
    Singular,

    #[error("sparse fit selected no variables")]
    EmptyModel,

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::ConstantColumn { .. } => "constant_column",
            Error::MonotoneLikelihood { .. } => "monotone_likelihood",
            Error::Singular => "singular",
            Error::EmptyModel => "empty_model",
            Error::Undefined(_) => "undefined",
            Error::Calibration(_) => "calibration",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
