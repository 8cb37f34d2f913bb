use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative duration {0}")]
    NegativeDuration(f64),

    #[error("coupled step requires x_low <= x_high, got {low} > {high}")]
    Unordered { low: f64, high: f64 },

    #[error("malformed quantile table: {0}")]
    QuantileTable(String),

    #[error("bridge crossing probability is undefined for jump drivers")]
    JumpDriver,

    #[error("time {t} outside boundary domain [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    #[error("infeasible boundary level at t = {t}: {survivors} survivors for target {target}")]
    InfeasibleQuantile { t: f64, survivors: usize, target: usize },

    #[error("too few survivors: {survivors} (need at least {required})")]
    TooFewSurvivors { survivors: usize, required: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
