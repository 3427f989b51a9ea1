use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown point id `{0}`")]
    UnknownPoint(String),
    #[error("unknown class id `{0}`")]
    UnknownClass(String),
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration requires {required} steps, cap is {cap}")]
    EnumerationCap { required: u128, cap: u128 },
    #[error("degenerate collision probability: {0}")]
    Degenerate(String),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
