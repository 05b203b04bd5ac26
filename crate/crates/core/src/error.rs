use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("points are not ordered: s = {s:?} is not <= t = {t:?}")]
    NotOrdered { s: Vec<f64>, t: Vec<f64> },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("component budget exceeded: {needed} components requested, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("certificate diverges: {0}")]
    CertificateDiverges(String),

    #[error("index {index} out of range (recorded: {recorded})")]
    OutOfRange { index: usize, recorded: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
