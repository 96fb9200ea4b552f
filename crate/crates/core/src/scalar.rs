//! Scalar traits shared by the polynomial layer and the numerical layers.
//!
//! Polynomial algebra only needs ring operations, so it is generic over
//! [`Scalar`], which covers `f32`, `f64` and exact [`BigRational`]
//! coefficients. Anything that integrates, takes square roots or compares
//! against tolerances works over [`Real`] (`f32` / `f64`).

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive, Zero};

/// Coefficient ring for polynomials.
pub trait Scalar:
    Num + Neg<Output = Self> + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when the coefficient should be dropped from a canonical term map.
    fn is_negligible(&self) -> bool;

    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Lossy conversion used for diagnostics; exact types round to nearest.
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-12
    }
}

impl Scalar for f32 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-6
    }
}

impl Scalar for BigRational {
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

/// Floating-point scalar used by evaluation, synthesis and simulation.
pub trait Real: Scalar + Float + Copy {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in every Real")
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Exact rational from a small integer numerator/denominator pair.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
