//! Exact calculus on polynomial scalar and vector fields.
//!
//! Vector fields act on scalars by `XV := (DV) X` and on fields by
//! `XY := (DY) X`; the bracket is `[X, Y] = XY - YX`. All derivatives are
//! symbolic, so every identity that holds for smooth fields holds here up
//! to coefficient round-off (exactly, for rational coefficients).

mod field;
mod poly;

use thiserror::Error;

pub use field::{apply_to_scalar, eval_field, iterated_apply, iterated_scalar, lie_bracket, PolyField};
pub use poly::{Monomial, PolyScalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a vector field needs at least one component")]
    Empty,
}
