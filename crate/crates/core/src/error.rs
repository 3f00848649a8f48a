use thiserror::Error;

use crate::newton::Valuation;

/// Errors raised by the arithmetic kernels and the pipelines built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("field size {size} exceeds the configured bound {bound}")]
    FieldTooLarge { size: u64, bound: u64 },
    #[error("polynomial {0} is not irreducible")]
    Reducible(String),
    #[error("precision must be at least 1, got {0}")]
    BadPrecision(i64),
    #[error("valuation is indeterminate at the working precision (known to be >= {at_least})")]
    IndeterminateValuation { at_least: Valuation },
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("twist mismatch: q={left} vs q={right}")]
    TwistMismatch { left: u64, right: u64 },
    #[error("leading coefficient is not invertible")]
    NonInvertibleLeading,
    #[error("division by zero")]
    DivisionByZero,
    #[error("kernel is not stable under phi_T (skew remainder is nonzero)")]
    UnstableKernel,
    #[error("zero input")]
    ZeroInput,
    #[error("need at least two finite points, got {0}")]
    TooFewPoints(usize),
    #[error("x-coordinates must be distinct (repeated {0})")]
    RepeatedAbscissa(i64),
    #[error("{0} out of range")]
    OutOfRange(String),
    #[error("brute-force bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("factorization did not converge: {0}")]
    NoConvergence(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }

    /// Failures that come from running out of precision rather than bad input.
    pub fn is_precision(&self) -> bool {
        matches!(
            self,
            Error::IndeterminateValuation { .. } | Error::Precision(_) | Error::NoConvergence(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
