//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by exact-arithmetic and structure-recognition routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    BadDegree,
    #[error("modulus is not a monic irreducible of the stated degree")]
    BadModulus,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("zero polynomial has no factorization")]
    ZeroPolynomial,
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is singular")]
    Singular,
    #[error("frames do not match")]
    FrameMismatch,
    #[error("invalid axis {axis} for frame with {axes} axes")]
    BadAxis { axis: usize, axes: usize },
    #[error("linear form must have one coefficient per axis, not all zero")]
    BadLinearForm,
    #[error("operator space input is empty")]
    EmptyInput,
    #[error("basis is not closed under the bracket")]
    NotBracketClosed,
    #[error("basis is not closed under the product")]
    NotProductClosed,
    #[error("algebra is not reductive: {0}")]
    NotReductive(String),
    #[error("input is outside the scoped class: {0}")]
    OutsideScopedClass(String),
    #[error("randomized search exhausted its retry budget in {0}")]
    RetryBudgetExhausted(&'static str),
    #[error("algebra is not generated by a single element")]
    NotCyclic,
    #[error("endomorphism ring is not a field (module not simple or not central)")]
    NotAField,
    #[error("module is not simple")]
    NotSimple,
    #[error("field towers are not supported here (coefficients not embeddable)")]
    UnsupportedTower,
    #[error("characteristic {p} is too small for this construction (needs > {bound})")]
    CharTooSmall { p: u64, bound: u64 },
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
