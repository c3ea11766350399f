use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("modulus not certified after {iterations} rounds (bounds [{lower:e}, {upper:e}])")]
    ModulusBudget { iterations: usize, lower: f64, upper: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(e.to_string())
    }
}
