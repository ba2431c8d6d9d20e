use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A config file or key could not be interpreted.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("mapping domain error: {0}")]
    MappingDomain(String),

    #[error("exponential overflow in inverse mapping: input {input} with d = {d}, c = {c}")]
    MappingOverflow { input: f64, d: f64, c: f64 },

    #[error("state {0} is terminal and has no feature encoding")]
    TerminalState(usize),

    #[error("index out of range: {what} = {index} (limit {limit})")]
    IndexOutOfRange { what: &'static str, index: usize, limit: usize },

    #[error("{variant} agents require non-negative rewards, got {reward}")]
    NegativeReward { variant: &'static str, reward: f64 },

    #[error("operation `{op}` is not defined for the {variant} variant")]
    WrongVariant { op: &'static str, variant: &'static str },

    #[error("no non-zero action gaps")]
    NoActionGaps,

    #[error("value iteration did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("schedule violates theorem condition {condition}: {reason}")]
    Schedule { condition: u8, reason: String },

    #[error("run cancelled")]
    Cancelled,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Config-class errors map to CLI exit status 1, everything else to 2.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::Schedule { .. }
        )
    }
}
