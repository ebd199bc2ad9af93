use std::fmt;

/// Errors produced by the numeric kernel and the model layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor argument is outside its admissible range.
    InvalidParameter { what: String },
    /// Malformed runtime input: mismatched lengths, empty grids, bad pmf.
    InvalidInput { what: String },
    /// A bracketing method was invoked on an interval without a sign change.
    NoBracket { lo: f64, hi: f64 },
    /// An iterative routine stopped before reaching its tolerance.
    /// `best` carries the best estimate reached, when one exists.
    NumericFailure { what: String, best: Option<f64> },
    /// Exact (quadrature) evaluation was requested for a law with an atom;
    /// such laws are handled by Monte Carlo only.
    UnsupportedLaw { what: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            Error::InvalidInput { what } => write!(f, "invalid input: {what}"),
            Error::NoBracket { lo, hi } => {
                write!(f, "no sign change on bracket [{lo}, {hi}]")
            }
            Error::NumericFailure { what, best } => match best {
                Some(b) => write!(f, "numeric failure: {what} (best estimate {b})"),
                None => write!(f, "numeric failure: {what}"),
            },
            Error::UnsupportedLaw { what } => {
                write!(f, "unsupported law: {what}; use Monte Carlo estimation instead")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_parameter(what: impl Into<String>) -> Self {
        Error::InvalidParameter { what: what.into() }
    }

    pub fn invalid_input(what: impl Into<String>) -> Self {
        Error::InvalidInput { what: what.into() }
    }

    pub fn numeric(what: impl Into<String>, best: Option<f64>) -> Self {
        Error::NumericFailure { what: what.into(), best }
    }

    pub fn unsupported_law(what: impl Into<String>) -> Self {
        Error::UnsupportedLaw { what: what.into() }
    }
}
