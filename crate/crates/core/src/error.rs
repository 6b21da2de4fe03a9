use thiserror::Error;

use crate::basis::WaveVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("vortices {i} and {j} coincide (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("mode {0} is not in the field's index set")]
    MissingMode(WaveVector),

    #[error("mode {mode} lies outside cutoff {cutoff}")]
    OutsideCutoff { mode: WaveVector, cutoff: u32 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("term budget exceeded: {required} terms required, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
