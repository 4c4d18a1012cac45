use thiserror::Error;

/// Errors produced by model validation and the numerical routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("enumeration cap exceeded: N={n} > cap={cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("sector cap exceeded: {sectors} sectors > cap={cap}")]
    SectorCapExceeded { sectors: usize, cap: usize },
    #[error("effective coupling matrix is singular (det={det})")]
    SingularMatrix { det: f64 },
    #[error("fixed point did not converge after {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("y-grid too narrow: {tail_mass:.3e} of quadrature mass fell outside [-y_max, y_max]")]
    GridTooNarrow { tail_mass: f64 },
    #[error("invalid integration path: {0}")]
    InvalidPath(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
