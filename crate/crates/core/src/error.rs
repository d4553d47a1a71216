use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Variants are grouped by the CLI exit code they map to: configuration and
/// input problems (including unwritable outputs) exit with 2, numerical
/// failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error(
        "absolute continuity violated: first law has mass {mass} at cell ({row}, {col}) where the second has none"
    )]
    AbsoluteContinuity { row: usize, col: usize, mass: f64 },

    #[error("stationarity condition violated: {0}")]
    Stationarity(String),

    #[error("quadrature did not converge: last iterate {last}, previous {previous}")]
    NonConvergence { last: f64, previous: f64 },

    #[error("worst-case density is negative on the support grid; largest feasible budget is {max_eta}")]
    BudgetTooLarge { max_eta: f64 },

    #[error("mean variance estimate {mean} is not positive (sample sd {nu}); the delta-method interval is undefined")]
    NonPositiveVariance { mean: f64, nu: f64 },

    #[error("state space has {size} outcomes, above the enumeration limit {limit}")]
    StateSpaceTooLarge { size: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::BudgetTooLarge { .. } | Error::NonPositiveVariance { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
