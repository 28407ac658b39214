use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },
    #[error("report error: {0}")]
    Report(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
