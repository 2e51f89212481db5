use thiserror::Error;

use crate::oracle::QueryLedger;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("action index {action} out of range for {alpha} actions")]
    ActionOutOfRange { action: usize, alpha: usize },

    #[error("player index {player} out of range for {n} players")]
    PlayerOutOfRange { player: usize, n: usize },

    #[error("payoff {value} is outside [0, 1]")]
    PayoffOutOfRange { value: f64 },

    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size limit exceeded: {required} entries needed, limit is {limit}")]
    SizeLimit { required: u128, limit: u128 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed payoff program: {0}")]
    Program(String),

    #[error("query budget exhausted after {} queries", .ledger.total_queries)]
    BudgetExhausted { ledger: QueryLedger },

    #[error("cannot renormalize group {group}: every majority entry falls below the truncation threshold")]
    DegenerateRenormalization { group: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
