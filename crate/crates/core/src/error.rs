use thiserror::Error;

use crate::solver::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("threshold undefined: {0}")]
    DivisionByZero(String),

    #[error("band verification failed: {0}")]
    BandCheck(String),

    #[error("solution blew up at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("non-physical state at t = {t}: min({field}) = {min:e}")]
    NonPhysical {
        t: f64,
        field: &'static str,
        min: f64,
        partial: Box<Trajectory>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
