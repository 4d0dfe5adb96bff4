//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the model's parameter space.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested value is outside the attainable range of some map.
    #[error("range error: {what} = {value} outside attainable interval ({lo}, {hi})")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The model/statistic pairing is not supported.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Operation is not defined for this input (e.g. AREs of the LLR statistic).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// The simulation budget ran out before both error constraints could be certified.
    #[error("budget exhausted: {reason} (best probed n = {best_n}, kappa = {best_kappa})")]
    InfeasibleBudget {
        reason: String,
        best_n: usize,
        best_kappa: f64,
    },

    /// A path feed ended before the test reached a decision.
    #[error("truncated feed: needed observation {needed}, feed holds {available}")]
    TruncatedFeed { needed: usize, available: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
