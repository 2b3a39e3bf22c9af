use thiserror::Error;

/// Errors raised by operator fitting, prediction, and model search.
#[derive(Debug, Error)]
pub enum MlError {
    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("operator is a {actual}, not a {expected}")]
    WrongKind { expected: &'static str, actual: &'static str },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("empty search space")]
    EmptySearchSpace,

    #[error("cross-validation needs k >= 2 and at least k rows (k = {k}, rows = {rows})")]
    BadFolds { k: usize, rows: usize },
}

impl MlError {
    /// Stable machine-readable class for CLI error reporting.
    pub fn class(&self) -> &'static str {
        match self {
            MlError::EmptyData(_) => "ml.empty_data",
            MlError::DimensionMismatch(_) => "ml.dimension_mismatch",
            MlError::NonFinite(_) => "ml.non_finite",
            MlError::InvalidSpec(_) => "ml.invalid_spec",
            MlError::WrongKind { .. } => "ml.wrong_kind",
            MlError::SolveFailed(_) => "ml.solve_failed",
            MlError::EmptySearchSpace => "ml.empty_search_space",
            MlError::BadFolds { .. } => "ml.bad_folds",
        }
    }
}
