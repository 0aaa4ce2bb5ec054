//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by configuration validation and numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// One or more configuration invariants are violated. Every violation is
    /// listed, each naming the offending field.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    /// An input is outside the domain of the operation (e.g. a probability
    /// outside [0,1], a negative variance).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical evaluation failed (overflow, non-finite intermediate,
    /// unphysical spectrum). Never silently propagated as NaN.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

/// Accumulates invariant violations so a config is checked in one pass.
#[derive(Debug, Default)]
pub(crate) struct Violations(Vec<String>);

impl Violations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.0.push(msg.into());
        }
    }

    pub fn into_result(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(self.0))
        }
    }
}
