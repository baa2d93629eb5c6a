use thiserror::Error;

use crate::cftp::{CoalescenceFailure, OrderViolation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid exhaustion: {0}")]
    InvalidExhaustion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} of size {size} exceeds the enumeration cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: u64,
        cap: u64,
    },

    #[error("refused: {0}")]
    Refused(String),

    #[error("{0}")]
    NoCoalescence(Box<CoalescenceFailure>),

    #[error("{0}")]
    OrderViolation(Box<OrderViolation>),

    #[error("monotonicity violation: {0}")]
    Monotonicity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
