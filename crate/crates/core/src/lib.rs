//! Sampled-data feedback stabilization of single-input affine systems
//! `x' = f(x) + u g(x)` under generalized control Lyapunov function
//! conditions.
//!
//! The crate is layered bottom-up:
//!
//! * [`field_algebra`]: exact polynomial scalar/vector fields, directional
//!   derivatives and Lie brackets.
//! * [`generators`]: the bracket generators `λ_{κ,j}` and tuple enumeration
//!   under order budgets.
//! * [`certificate`]: point-wise classification of a system against the
//!   stabilizability hypotheses.
//! * [`synthesis`]: the smooth feedback and the two-phase bracket schedule.
//! * [`integrate`] and [`simulate`]: piecewise-constant-input integration and
//!   the sampled-data closed loop with its verification report.
//! * [`bench`]: the benchmark family `f = (a + yβ + y²γ + y³δ, 0)`,
//!   `g = (0, 1)`, `V = W + y²`.
//! * [`parse`] and [`record`]: the text formats used by the CLI.
//!
//! Polynomial layers are generic over [`Scalar`] (`f32`, `f64`,
//! [`BigRational`]); numerical layers over [`Real`]. The aliases below fix
//! the common choices.

pub mod bench;
pub mod certificate;
pub mod field_algebra;
pub mod generators;
pub mod integrate;
pub mod parse;
pub mod record;
pub mod scalar;
pub mod simulate;
pub mod synthesis;
pub mod system;

pub use num_rational::BigRational;
pub use scalar::{Real, Scalar};

/// Double-precision polynomial.
pub type Poly = field_algebra::PolyScalar<f64>;
/// Double-precision polynomial vector field.
pub type Field = field_algebra::PolyField<f64>;
/// Double-precision affine system with its Lyapunov candidate.
pub type System = system::AffineSystem<f64>;
/// Exact rational polynomial.
pub type ExactPoly = field_algebra::PolyScalar<BigRational>;
/// Exact rational vector field.
pub type ExactField = field_algebra::PolyField<BigRational>;
/// Exact rational affine system.
pub type ExactSystem = system::AffineSystem<BigRational>;
