use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{activation} is undefined at x = {x}: {reason}")]
    Domain {
        activation: String,
        x: f64,
        reason: &'static str,
    },

    #[error("particle {index} left the finite range (value {value})")]
    Overflow { index: usize, value: f64 },

    #[error("{count} particle(s) outside the grid, first indices: {indices:?}")]
    OutsideGrid { count: usize, indices: Vec<usize> },

    #[error("sample list `{0}` is empty")]
    EmptySample(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step collapsed to {dt:e} at t = {t}")]
    CflFailure { t: f64, dt: f64 },

    #[error("no dynamics: both transport and diffusion speeds vanish")]
    NoDynamics,

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("negative density {value:e} at cell {index} exceeds tolerance")]
    NegativeDensity { index: usize, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("weight matrix is rank deficient (det = {det:e})")]
    RankDeficient { det: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("retraining diverged after {iterations} iterations (loss rose {streak} times in a row)")]
    Diverged { iterations: usize, streak: usize },

    #[error("{count} particle(s) escaped the safety box [{lower}, {upper}]")]
    Escaped { count: usize, lower: f64, upper: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
