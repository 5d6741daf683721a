// SPDX-License-Identifier: MIT
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("compound index {index} out of range for {d} compounds")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("invalid experiment design: {0}")]
    InvalidDesign(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// `det(I - B)` vanished; the disturbance-to-data map is not invertible.
    #[error("I - B is singular")]
    SingularMatrix,

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("all {0} optimizer restarts failed")]
    AllRestartsFailed(usize),

    #[error("graph violates structure constraints: {0}")]
    ConstraintViolation(String),

    #[error("empty sample")]
    EmptySample,

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("unknown compound name `{0}`")]
    UnknownCompound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InvalidDesign(_) => "invalid_design",
            Error::InvalidParameters(_) => "invalid_parameters",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::SingularMatrix => "singular_matrix",
            Error::NumericalBreakdown(_) => "numerical_breakdown",
            Error::AllRestartsFailed(_) => "all_restarts_failed",
            Error::ConstraintViolation(_) => "constraint_violation",
            Error::EmptySample => "empty_sample",
            Error::Parse { .. } => "parse_error",
            Error::UnknownCompound(_) => "unknown_compound",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
