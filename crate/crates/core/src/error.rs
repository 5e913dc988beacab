use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum LpcError {
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("alpha_{index} = {value} must be strictly positive")]
    InvalidAlpha { index: usize, value: f64 },

    #[error("lambda must be strictly positive for this operation (got {0})")]
    LambdaRequired(f64),

    #[error("enumeration needs {needed} nodes but the budget is {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("label alignment supports at most {max} clusters (got {k})")]
    KTooLarge { k: usize, max: usize },

    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("invalid solver config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("target column `{column}` is not numeric (row {row}: {value:?})")]
    NonNumericTarget {
        column: String,
        row: usize,
        value: String,
    },

    #[error("need at least two groups eligible for fitting, found {0}")]
    TooFewGroups(usize),

    #[error("no usable data left after filtering: {0}")]
    DegenerateAfterFilter(String),

    #[error("projector would need {n}x{n} entries, above the cap of {cap}")]
    ProjectorTooLarge { n: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LpcError {
    /// Coarse classification used by front ends to pick exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            LpcError::InvalidSpec { .. }
            | LpcError::InvalidConfig { .. }
            | LpcError::InvalidAlpha { .. }
            | LpcError::LambdaRequired(_)
            | LpcError::KTooLarge { .. }
            | LpcError::MissingColumn(_) => ErrorCategory::Usage,
            LpcError::InvalidDataset(_)
            | LpcError::InvalidAssignment(_)
            | LpcError::DimensionMismatch(_)
            | LpcError::NonNumericTarget { .. }
            | LpcError::TooFewGroups(_)
            | LpcError::DegenerateAfterFilter(_)
            | LpcError::Io(_)
            | LpcError::Csv(_)
            | LpcError::Json(_) => ErrorCategory::Data,
            LpcError::NotPositiveDefinite { .. }
            | LpcError::BudgetExceeded { .. }
            | LpcError::ProjectorTooLarge { .. } => ErrorCategory::Solver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Solver,
}

pub type Result<T, E = LpcError> = std::result::Result<T, E>;
