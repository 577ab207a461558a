use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("gamma function pole at non-positive integer {0}")]
    Pole(f64),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("ill-conditioned boundary fit: {0}")]
    IllConditioned(String),
    #[error("spectral parameter z = {re}{im:+}i lies in the spectrum (determinant {det:.3e})")]
    SpectrumHit { re: f64, im: f64, det: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operator does not generate an analytic semigroup: {0}")]
    NotGenerator(String),
    #[error("grid cannot resolve the requested function: {0}")]
    GridResolution(String),
    #[error("quadrature tolerance not met: estimated error {estimate:.3e} > {tolerance:.3e}")]
    QuadratureTolerance { estimate: f64, tolerance: f64 },
    #[error("Picard iteration is not contractive: R = {radius} < 2|b| = {required}")]
    NonContraction { radius: f64, required: f64 },
    #[error("invalid extension choice for mode n = {mode}: {reason}")]
    InvalidChoice { mode: usize, reason: String },
    #[error("mode of degree {degree}: {inner}")]
    InMode { degree: usize, inner: Box<Error> },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for violations of a mathematical precondition (as opposed to
    /// malformed input or numerical failure).
    pub fn is_precondition(&self) -> bool {
        if let Error::InMode { inner, .. } = self {
            return inner.is_precondition();
        }
        matches!(
            self,
            Error::Domain(_)
                | Error::Pole(_)
                | Error::SpectrumHit { .. }
                | Error::NotGenerator(_)
                | Error::NonContraction { .. }
                | Error::InvalidChoice { .. }
        )
    }
}
