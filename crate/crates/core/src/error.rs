use thiserror::Error;

/// Error type shared by every module. `code()` gives the stable identifier
/// used in reports and CLI diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("NOT_HERMITIAN: relative deviation {0:.3e}")]
    NotHermitian(f64),
    #[error("EIG_FAIL: {0}")]
    EigFail(String),
    #[error("BAD_EXPONENT: p = {0} (need p >= 1)")]
    BadExponent(f64),
    #[error("NOT_PSD: eigenvalue {min:.3e} below -{tol:.3e}")]
    NotPsd { min: f64, tol: f64 },
    #[error("LEVEL_TOO_LARGE: {0}")]
    LevelTooLarge(String),
    #[error("PARAM_MISMATCH")]
    ParamMismatch,
    #[error("TRUNCATION_LOSS: {0}")]
    TruncationLoss(String),
    #[error("SHAPE_MISMATCH: {0}")]
    ShapeMismatch(String),
    #[error("UNKNOWN_ROUTE: {0}")]
    UnknownRoute(String),
    #[error("FILTRATION_VIOLATION: {0}")]
    FiltrationViolation(String),
    #[error("WINDOW_OVERFLOW: frequency {freq} outside [-{window}, {window}]")]
    WindowOverflow { freq: i64, window: i64 },
    #[error("INVALID_PARAMS: {0}")]
    InvalidParams(String),
}

impl QError {
    pub fn code(&self) -> &'static str {
        match self {
            QError::NotHermitian(_) => "NOT_HERMITIAN",
            QError::EigFail(_) => "EIG_FAIL",
            QError::BadExponent(_) => "BAD_EXPONENT",
            QError::NotPsd { .. } => "NOT_PSD",
            QError::LevelTooLarge(_) => "LEVEL_TOO_LARGE",
            QError::ParamMismatch => "PARAM_MISMATCH",
            QError::TruncationLoss(_) => "TRUNCATION_LOSS",
            QError::ShapeMismatch(_) => "SHAPE_MISMATCH",
            QError::UnknownRoute(_) => "UNKNOWN_ROUTE",
            QError::FiltrationViolation(_) => "FILTRATION_VIOLATION",
            QError::WindowOverflow { .. } => "WINDOW_OVERFLOW",
            QError::InvalidParams(_) => "INVALID_PARAMS",
        }
    }
}

pub type Result<T> = std::result::Result<T, QError>;
