use thiserror::Error;

/// Errors produced anywhere in the simulation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("response model failed quality gate: auc={auc:.4} (min {min_auc}), mae={mae:.4} (max {max_mae})")]
    QualityGate {
        auc: f64,
        mae: f64,
        min_auc: f64,
        max_mae: f64,
    },

    #[error("shape error: expected {expected} columns, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("budget error: requested {requested} from {available} available points")]
    Budget { requested: usize, available: usize },

    #[error("state error: {0}")]
    State(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
