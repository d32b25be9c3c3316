use thiserror::Error;

use crate::analysis::Trajectory;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("vertex index {index} out of range for graph with {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("no admissible convexity parameter: {0}")]
    Infeasible(String),

    #[error("integration diverged at t = {t}")]
    Diverged { t: f64, partial: Box<Trajectory> },

    #[error("step budget exceeded: {required} steps needed, cap is {cap}")]
    StepBudget { required: u64, cap: u64 },

    #[error("trajectory too coarse: {0}")]
    TooCoarse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
