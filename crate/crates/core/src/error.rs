use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A function was called outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent combination of options.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NaN/inf detected, or an iteration failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ensemble aborted: {failed} of {total} trajectories failed (first error: {first})")]
    EnsembleAborted {
        failed: usize,
        total: usize,
        first: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
