use thiserror::Error;

/// Errors raised by the transform library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("target {target} coincides with source {source_index} at {value}")]
    CoincidentPoints {
        target: usize,
        source_index: usize,
        value: f64,
    },

    #[error("off-diagonal entry {index} is zero; split the matrix into unreduced blocks first")]
    ReducibleMatrix { index: usize },

    #[error("secular root did not converge in ({lo}, {hi}) after {iterations} iterations")]
    SecularNonConvergence { lo: f64, hi: f64, iterations: usize },

    #[error("secular roots fail to interlace the poles near {value}")]
    InterlacingViolation { value: f64 },

    #[error("numerical degeneracy at index {index}: {reason}")]
    NumericalDegeneracy { index: usize, reason: String },

    #[error("certification failed for index {index}: {reason}")]
    Certification { index: usize, reason: String },

    #[error("problem size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 0.1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1/10], got {eps}"
        )))
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}
