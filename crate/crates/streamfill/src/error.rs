//! Crate-wide error type.

use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by series construction, model fitting, scoring, and the
/// experiment harness.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The two series share no common date or station.
    EmptyIntersection,
    /// The forecast series has a missing cell inside the aligned range.
    ForecastGap { date: String, station: String },
    /// A chronological split left the train or test side empty.
    DegenerateSplit { train_len: usize, test_len: usize },
    /// A mask cell points outside the matrix bounds.
    IndexOutOfRange { time: usize, station: usize },
    /// Paired vectors differ in length.
    LengthMismatch { left: usize, right: usize },
    /// Too few values for the requested computation.
    TooFewSamples { needed: usize, got: usize },
    /// Zero variance makes a correlation or variability ratio undefined.
    DegenerateVariance,
    /// Zero observed mean makes the bias ratio undefined.
    DegenerateMean,
    /// A masked evaluation cell was left unfilled by the imputer.
    UnimputedCell { time: usize, station: usize },
    /// Fewer than two samples available for an empirical CDF.
    InsufficientSamples { station: Option<String>, got: usize },
    /// Station not present in the fitted model.
    UnknownStation(String),
    /// No training rows with every station observed.
    NoCompleteRows,
    /// No complete in-situ rows to train a baseline on.
    NoCompleteTrainingRows,
    /// Not enough rows for the requested fold count.
    InsufficientRows { rows: usize, folds: usize },
    /// Cholesky factorization failed after exhausting the jitter ladder.
    CholeskyFailure,
    /// Input dimension differs from what the model was fitted on.
    DimensionMismatch { expected: usize, got: usize },
    /// Invalid generator or method configuration.
    InvalidConfig(String),
    /// CSV parse failure at a specific location (1-based line and column).
    ParseError { line: usize, column: usize, reason: String },
    /// Dates in the input are not strictly increasing.
    NonMonotoneDates { line: usize },
    /// Invalid series construction (shape or invariant violation).
    InvalidSeries(String),
    /// Invalid experiment plan.
    InvalidPlan(String),
    /// Underlying filesystem failure.
    Io(String),
}

impl Error {
    /// Short machine-readable identifier, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyIntersection => "EmptyIntersection",
            Error::ForecastGap { .. } => "ForecastGap",
            Error::DegenerateSplit { .. } => "DegenerateSplit",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::DegenerateMean => "DegenerateMean",
            Error::UnimputedCell { .. } => "UnimputedCell",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::UnknownStation(_) => "UnknownStation",
            Error::NoCompleteRows => "NoCompleteRows",
            Error::NoCompleteTrainingRows => "NoCompleteTrainingRows",
            Error::InsufficientRows { .. } => "InsufficientRows",
            Error::CholeskyFailure => "CholeskyFailure",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ParseError { .. } => "ParseError",
            Error::NonMonotoneDates { .. } => "NonMonotoneDates",
            Error::InvalidSeries(_) => "InvalidSeries",
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::Io(_) => "Io",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyIntersection => {
                write!(f, "observed and forecast series share no common date or station")
            }
            Error::ForecastGap { date, station } => {
                write!(f, "forecast has a missing cell at {date} / station {station}")
            }
            Error::DegenerateSplit { train_len, test_len } => write!(
                f,
                "chronological split is degenerate (train {train_len} dates, test {test_len})"
            ),
            Error::IndexOutOfRange { time, station } => {
                write!(f, "mask cell ({time}, {station}) is out of range")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "vector lengths differ ({left} vs {right})")
            }
            Error::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::DegenerateVariance => write!(f, "zero variance makes the metric undefined"),
            Error::DegenerateMean => write!(f, "zero observed mean makes the bias ratio undefined"),
            Error::UnimputedCell { time, station } => {
                write!(f, "masked cell ({time}, {station}) was not imputed")
            }
            Error::InsufficientSamples { station, got } => match station {
                Some(s) => write!(f, "station {s}: {got} samples is too few for an empirical CDF"),
                None => write!(f, "{got} samples is too few for an empirical CDF"),
            },
            Error::UnknownStation(s) => write!(f, "station {s} is not in the fitted model"),
            Error::NoCompleteRows => write!(f, "no training rows with every station observed"),
            Error::NoCompleteTrainingRows => {
                write!(f, "no complete in-situ rows available for training")
            }
            Error::InsufficientRows { rows, folds } => {
                write!(f, "{rows} rows is too few for {folds}-fold cross validation")
            }
            Error::CholeskyFailure => {
                write!(f, "Cholesky factorization failed after exhausting the jitter ladder")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "input dimension {got} does not match the fitted dimension {expected}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::ParseError { line, column, reason } => {
                write!(f, "parse error at line {line}, column {column}: {reason}")
            }
            Error::NonMonotoneDates { line } => {
                write!(f, "dates are not strictly increasing at line {line}")
            }
            Error::InvalidSeries(msg) => write!(f, "invalid series: {msg}"),
            Error::InvalidPlan(msg) => write!(f, "invalid plan: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
