use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mass gap violated: {0}")]
    MassGap(String),

    #[error("support violation: {0}")]
    Support(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("sum diverges: {0}")]
    Divergent(String),

    #[error("inequality check failed: {0}")]
    CheckFailed(String),
}

impl LabError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that indicate a broken numerical invariant rather
    /// than bad input.
    pub fn is_check_failure(&self) -> bool {
        matches!(self, LabError::CheckFailed(_))
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Returns an error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(LabError::param(
            name,
            format!("must be positive, got {value}"),
        ))
    }
}
