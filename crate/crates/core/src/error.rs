use thiserror::Error;

/// Errors produced while building meshes, kernels, or running a solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mesh must contain at least one node")]
    EmptyMesh,

    #[error("duplicate node at index {index}: {value}")]
    DuplicateNode { index: usize, value: f64 },

    #[error("nodes not in ascending order at index {index}: {prev} > {next}")]
    UnsortedInput { index: usize, prev: f64, next: f64 },

    #[error("non-finite coordinate at index {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regularization parameter must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("non-finite value at index {index} of input vector")]
    NonFiniteInput { index: usize },

    #[error("dense materialization of {requested} entries exceeds cap {cap}")]
    SizeCapExceeded { requested: usize, cap: usize },

    #[error(
        "non-finite iterate at iteration {iteration} (index {index}); \
         enable stabilization or increase epsilon"
    )]
    NonFiniteIterate { iteration: usize, index: usize },

    #[error(
        "kernel product vanished at index {index} (iteration {iteration}) where the target mass \
         is positive; enable stabilization or increase epsilon"
    )]
    ZeroDenominator { iteration: usize, index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("log-log fit needs at least {needed} distinct sizes, got {got}")]
    UnderdeterminedFit { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(())
}
