use thiserror::Error;

/// Errors produced by the renewal library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the interval an operation is defined on.
    #[error("{name} = {value} is outside the valid range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: String,
    },

    /// Adaptive quadrature hit its subdivision limit before reaching the tolerance.
    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e} > tolerance {tol:e} after {panels} panels")]
    Nonconvergence {
        a: f64,
        b: f64,
        estimate: f64,
        tol: f64,
        panels: usize,
    },

    /// A bijection description is malformed.
    #[error("invalid bijection: {0}")]
    InvalidSpec(String),

    /// A knot file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The alternating series for M(t) loses too many digits beyond its cap.
    #[error("M(t) series is not accurate for t = {t} (cap {cap}); use the solver or the asymptote 2t + 2/3")]
    Accuracy { t: f64, cap: f64 },

    /// An operation was called outside its documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A single stopping-time sample needed more draws than the iteration cap.
    #[error("stopping time exceeded {cap} draws; the bijection is probably malformed")]
    IterationCap { cap: u64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::Domain {
            name,
            value,
            range: range.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
