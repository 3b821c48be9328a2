use thiserror::Error;

use crate::params::Model;

/// Errors produced by the rate computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its domain (negative power, α > 1, ...).
    #[error("invalid parameter: {0}")]
    Validation(String),

    /// The circular topology needs more cells than were requested.
    #[error("the {model} model needs at least {min} cells, got {got}")]
    TooFewCells { model: Model, min: usize, got: usize },

    /// Brute-force subset enumeration is limited to small networks.
    #[error("subset enumeration supports at most {max} cells, got {got}")]
    TooManyCells { max: usize, got: usize },

    /// No evaluator exists for the requested scenario.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// A quadrature, factorisation or search did not converge.
    #[error("numerical failure in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    /// The minimum energy per bit is infinite when no backhaul is available.
    #[error("zero backhaul capacity: the minimum energy per bit is infinite")]
    ZeroBackhaul,
}

impl Error {
    pub(crate) fn numeric(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag, used in CSV error rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::TooFewCells { .. } | Error::TooManyCells { .. } => "size",
            Error::Unsupported(_) => "unsupported",
            Error::Numeric { .. } => "numeric",
            Error::ZeroBackhaul => "zero-backhaul",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
