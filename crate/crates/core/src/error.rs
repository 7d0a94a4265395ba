use thiserror::Error;

/// Errors raised by the statistics, asymptotics and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested quantity does not exist for this model (e.g. moments of
    /// the Cauchy distribution).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("insufficient sample: need at least {needed} observations, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Exhaustive enumeration was refused because the sample is too large.
    #[error("sample of size {n} exceeds the enumeration limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    /// Integer subset counts overflowed 128 bits.
    #[error("subset count overflow for n = {n}, subset size {k}")]
    CountOverflow { n: usize, k: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub fn is_not_applicable(&self) -> bool {
        matches!(self, Error::NotApplicable(_))
    }
}
