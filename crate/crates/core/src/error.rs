use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point is outside the domain")]
    OutsideDomain,

    #[error("classification unresolved at tolerance {tol:e}: {reason}")]
    Unresolved { tol: f64, reason: String },

    #[error(
        "direction is fluctuating: difference quotients do not settle ({spread:e} relative spread)"
    )]
    Fluctuating { spread: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no closed form for this sector; use Monte Carlo moments")]
    NoClosedForm,

    #[error("quadrature did not converge (best estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("rejection acceptance rate {rate:e} below 1e-4; tighten the bounding box")]
    LowAcceptance { rate: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

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

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
