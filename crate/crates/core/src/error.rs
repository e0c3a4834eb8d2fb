use thiserror::Error;

/// Domain errors raised by the physical models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("elevation angle {0} deg outside [0, 90]")]
    ElevationOutOfRange(f64),

    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("sample period must be positive, got {0} s")]
    NonPositiveSamplePeriod(f64),

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
