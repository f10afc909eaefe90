use thiserror::Error;

/// Errors produced by the solvers and projection oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line search failed after {backtracks} backtracks (slope {slope:e})")]
    LineSearchFailed { backtracks: usize, slope: f64 },
    #[error("direction requested at a zero gradient")]
    ZeroGradient,
    #[error("polyhedron is empty")]
    InfeasiblePolyhedron,
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("objective fell below the divergence floor ({0:e})")]
    Diverged(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

pub fn check_finite(context: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}
