use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotSpd { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("linear system is numerically singular (pivot {pivot:e} at index {index})")]
    SingularSystem { index: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid problem: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("rate undefined: rho = {rho:e} does not exceed rho0 = {rho0:e}")]
    RateUndefined { rho: f64, rho0: f64 },

    #[error("pressure requested but no Q basis or Riesz data is available")]
    MissingQBasis,

    #[error("tol2 = {tol2:e} must exceed tol1 = {tol1:e} when the G-subsolve runs")]
    TolOrder { tol1: f64, tol2: f64 },

    #[error("iteration cap of {iterations} reached (last residual {residual:e})")]
    MaxIters { iterations: usize, residual: f64 },

    #[error("kernel restriction of a is singular; the tilde/hat split is undefined")]
    IllPosedKernel,

    #[error("coupled and eliminated solves disagree (relative deviation {deviation:e})")]
    PathDisagreement { deviation: f64 },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
