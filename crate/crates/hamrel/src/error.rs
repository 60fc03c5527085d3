//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Numerical *verdicts* (an assumption failing on a given instance, a
/// diagnostic not passing) are reported through report structs, not
/// through this type; `Error` is reserved for calls whose preconditions
/// make the requested computation impossible.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interval mismatch: {0}")]
    IntervalMismatch(String),

    #[error("invertibility assumption fails at site {site}: {what} is singular (cond ≈ {cond:.3e})")]
    AssumptionA1 {
        site: i64,
        what: &'static str,
        cond: f64,
    },

    #[error("definiteness fails: {0}")]
    Definiteness(String),

    #[error("weight block at site {site} is not Hermitian positive semi-definite: {detail}")]
    InvalidWeight { site: i64, detail: String },

    #[error("pair is not a member of the relation (residual {residual:.3e} > {tol:.3e})")]
    NotInRelation { residual: f64, tol: f64 },

    #[error("subspace containment fails (max principal angle {angle:.3e} rad)")]
    NotContained { angle: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
