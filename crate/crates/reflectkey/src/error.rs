//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, covariance algebra, entropy
/// estimation and run orchestration.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or circuit parameter violates its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// An observation label was requested that the batch/matrix does not carry.
    #[error("unknown observation label `{0}`")]
    UnknownLabel(String),

    /// Label lists passed as partitions share an element.
    #[error("observation partitions overlap on `{0}`")]
    OverlappingPartitions(String),

    /// A covariance matrix failed the positive-definiteness check.
    #[error("covariance is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// A mutual-information value came out negative beyond numerical noise.
    #[error("mutual information is negative beyond tolerance: {0} bits")]
    NegativeMutualInformation(f64),

    /// Not enough samples for the requested estimator configuration.
    #[error("sample batch too small: {0}")]
    BatchTooSmall(String),

    /// Samples collapse onto duplicate points even after jitter.
    #[error("degenerate sample set: {0}")]
    DegenerateSamples(String),

    /// An entropy term of a bound could not be estimated.
    #[error("entropy estimation failed for term {term}: {source}")]
    Estimation {
        term: String,
        #[source]
        source: Box<Error>,
    },

    /// Run configuration failed validation; `field` names the offending key.
    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The configuration file could not be parsed at all.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("result file error: {0}")]
    ResultFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::ResultFormat(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
