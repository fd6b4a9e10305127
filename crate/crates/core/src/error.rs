use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("no contact: force {force} N is at or below the contact threshold {threshold} N")]
    NoContact { force: f64, threshold: f64 },

    #[error("strain {strain} outside the admissible range [0, {ceiling}]")]
    InvalidStrain { strain: f64, ceiling: f64 },

    #[error("degenerate viscoelastic model at force {force} N: {reason}")]
    DegenerateModel { force: f64, reason: String },

    #[error("conductance {value} S is not positive (m*F + d <= 0)")]
    NegativeConductance { value: f64 },

    #[error("regressor is rank deficient (condition number {condition_number:e})")]
    SingularRegressor { condition_number: f64 },

    #[error("cannot invert (a, b, c) = ({a}, {b}, {c}): {reason}")]
    DegenerateInversion { a: f64, b: f64, c: f64, reason: String },

    #[error("resistance {resistance} ohm has no strain in [0, {ceiling}] at force {force} N")]
    OutOfRange { resistance: f64, force: f64, ceiling: f64 },

    #[error("need at least {required} distinct force levels, got {found}")]
    InsufficientLevels { required: usize, found: usize },

    #[error("time bases differ: {0}")]
    TimeBaseMismatch(String),

    #[error("obstacle radius {radius} m is below half the segment length ({half_segment} m)")]
    ObstacleTooSharp { radius: f64, half_segment: f64 },

    #[error("command rate {rate} Hz is below twice the highest shift frequency {frequency} Hz")]
    RateTooLow { rate: f64, frequency: f64 },

    #[error("malformed trace: {0}")]
    TraceFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Variant name, used as a stable tag in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::NoContact { .. } => "NoContact",
            Error::InvalidStrain { .. } => "InvalidStrain",
            Error::DegenerateModel { .. } => "DegenerateModel",
            Error::NegativeConductance { .. } => "NegativeConductance",
            Error::SingularRegressor { .. } => "SingularRegressor",
            Error::DegenerateInversion { .. } => "DegenerateInversion",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InsufficientLevels { .. } => "InsufficientLevels",
            Error::TimeBaseMismatch(_) => "TimeBaseMismatch",
            Error::ObstacleTooSharp { .. } => "ObstacleTooSharp",
            Error::RateTooLow { .. } => "RateTooLow",
            Error::TraceFormat(_) => "TraceFormat",
            Error::Io { .. } => "Io",
            Error::Json { .. } => "Json",
            Error::Csv { .. } => "Csv",
        }
    }

    /// True for errors caused by user-supplied inputs (files, configuration)
    /// rather than by the numerical models.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Json { .. }
                | Error::Csv { .. }
                | Error::TraceFormat(_)
                | Error::TimeBaseMismatch(_)
                | Error::InvalidParameter { .. }
        )
    }
}
