//! Exact sparse multivariate polynomials over the Gaussian rationals.
//!
//! Polynomials carry their variable names; binary operations embed both
//! operands into the union ring, so the homogenizing variable can be
//! introduced without bookkeeping at call sites.

mod monomial;
mod numpoly;
mod poly;
mod scalar;

pub use monomial::Monomial;
pub use numpoly::NumPoly;
pub use poly::{poly_arith, ArithOp, Operand, Poly};
pub use scalar::GaussRational;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable `{0}` appears twice in the ring")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("homogenization degree {requested} is below the polynomial degree {degree}")]
    DegreeTooSmall { requested: u32, degree: u32 },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("power substitution needs an exponent of at least 1")]
    ZeroPower,
    #[error("invalid coefficient `{0}` (expected p/q or p/q+r/s i)")]
    BadCoefficient(String),
}
