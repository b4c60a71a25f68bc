use thiserror::Error;

/// Errors raised by model construction, the solvers and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch for `{name}`: expected {expected}, got {got}")]
    Dimension {
        name: &'static str,
        expected: usize,
        got: usize,
    },

    #[error(
        "device {device} is not energy constrained: mu*P*h = {harvest:.3e} >= k*f_max^3 = {capacity:.3e}"
    )]
    NotEnergyConstrained {
        device: usize,
        harvest: f64,
        capacity: f64,
    },

    #[error("infeasible allocation: {constraint}")]
    Infeasible { constraint: String },

    #[error("argument {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("could not bracket the dual root: Q({upper:.3e}) = {value:.3e} is still positive")]
    Bracketing { upper: f64, value: f64 },

    #[error("enumeration refused: n = {n} exceeds the guard of {limit} devices")]
    TooLarge { n: usize, limit: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
