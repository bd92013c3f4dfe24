use thiserror::Error;

/// Errors produced by grid construction, field algebra, solvers, and codecs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids ({left} vs {right} points per axis)")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} outside trace span [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("trace has no samples")]
    EmptyTrace,

    #[error("trace times must start at 0 and increase strictly")]
    BadTimeGrid,

    #[error("blow-up suspected at t = {last_valid_time}: {reason}")]
    BlowupSuspected {
        last_valid_time: f64,
        reason: String,
        /// Samples accumulated before the halt, for post-mortem tracking.
        partial: Box<crate::field::TimeTrace>,
    },

    #[error("malformed field container: {0}")]
    Container(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown frozen constant `{0}`; run calibration first")]
    MissingConstant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps a JSON parse failure as a line-anchored config error.
    pub fn config_from_json(e: serde_json::Error) -> Self {
        Error::Config { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
