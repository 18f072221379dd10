use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("characteristic flow is degenerate (|det V| = {det_v:e}); integrate the characteristics numerically instead")]
    DegenerateFlow { det_v: f64 },

    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: f64, reason: String },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last iterate {last}, last change {delta:e})")]
    NotConverged { iterations: usize, last: f64, delta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
