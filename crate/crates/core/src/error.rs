//! Error types shared across the crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or spec value is outside its allowed range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Training requires complete records.
    #[error("incomplete training data: {0}")]
    IncompleteTrainingData(String),

    /// Training inputs must be min-max normalized to [0, 1].
    #[error("value {value} at record {record}, feature {feature} is outside [0, 1]")]
    Normalization {
        record: usize,
        feature: usize,
        value: f64,
    },

    /// The record has no missing cells.
    #[error("record has no missing cells to impute")]
    NothingToImpute,

    /// The objective does not carry a gradient but the optimizer needs one.
    #[error("objective does not supply a gradient")]
    UnsupportedObjective,

    /// A feature column has no observed values to derive statistics from.
    #[error("feature column {0} has no observed values")]
    DegenerateColumn(usize),

    #[error("feature {feature}: {needed} donors required but only {available} records observe it")]
    InsufficientDonors {
        feature: usize,
        needed: usize,
        available: usize,
    },

    /// CSV or model-file parse failure with a 1-based file location.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
