use thiserror::Error;

/// Errors raised by the averaging laboratory.
///
/// Variants are grouped by the contract they guard; the message carries the
/// offending values so CLI reports can surface them verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("incompatible representations: {0}")]
    Incompatible(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("unsupported conversion: {0}")]
    Conversion(String),
    #[error("resolution too low: {0}")]
    Resolution(String),
    #[error("exponent overflow: {0}")]
    ExponentOverflow(String),
    #[error("unsupported operator: {0}")]
    UnsupportedOperator(String),
    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("strategy not applicable: {0}")]
    Strategy(String),
    #[error("predictor not applicable: {0}")]
    NotApplicable(String),
    #[error("wrong system kind: {0}")]
    Kind(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("not representable: {0}")]
    Unrepresentable(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
