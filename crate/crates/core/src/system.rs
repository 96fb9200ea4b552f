//! The affine system `x' = f(x) + u g(x)` together with its candidate
//! Lyapunov function `V`.

use thiserror::Error;

use crate::certificate::{for_each_grid_point, Region};
use crate::field_algebra::{FieldError, PolyField, PolyScalar};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("f({component}) has a nonzero constant term, so the origin is not an equilibrium")]
    DriftNotZeroAtOrigin { component: usize },
    #[error("V(0) must be 0")]
    LyapunovNotZeroAtOrigin,
    #[error("V has linear terms and cannot be positive definite")]
    LyapunovHasLinearTerms,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineSystem<T> {
    f: PolyField<T>,
    g: PolyField<T>,
    v: PolyScalar<T>,
}

impl<T: Scalar> AffineSystem<T> {
    /// Checks the symbolic necessary conditions: matching dimensions,
    /// `f(0) = 0`, `V(0) = 0`, and no linear part in `V`.
    pub fn new(f: PolyField<T>, g: PolyField<T>, v: PolyScalar<T>) -> Result<Self, SystemError> {
        let n = f.dim();
        for found in [g.dim(), v.dim()] {
            if found != n {
                return Err(FieldError::DimensionMismatch { expected: n, found }.into());
            }
        }
        if let Some(component) = f.components().iter().position(|c| !c.constant_term().is_negligible()) {
            return Err(SystemError::DriftNotZeroAtOrigin { component: component + 1 });
        }
        if !v.constant_term().is_negligible() {
            return Err(SystemError::LyapunovNotZeroAtOrigin);
        }
        if v.has_linear_terms() {
            return Err(SystemError::LyapunovHasLinearTerms);
        }
        Ok(AffineSystem { f, g, v })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn f(&self) -> &PolyField<T> {
        &self.f
    }

    pub fn g(&self) -> &PolyField<T> {
        &self.g
    }

    pub fn v(&self) -> &PolyScalar<T> {
        &self.v
    }

    /// Same system with `V` replaced by `c V`.
    pub fn with_scaled_v(&self, c: &T) -> Self {
        AffineSystem {
            f: self.f.clone(),
            g: self.g.clone(),
            v: self.v.scale(c),
        }
    }

    /// The vector field `f + u g` for a frozen input value.
    pub fn closed_field(&self, u: &T) -> PolyField<T> {
        self.f.add_scaled(u, &self.g).expect("dimensions checked at construction")
    }

    pub fn map_coeffs<U: Scalar>(&self, mut conv: impl FnMut(&T) -> U) -> AffineSystem<U> {
        AffineSystem {
            f: self.f.map_coeffs(&mut conv),
            g: self.g.map_coeffs(&mut conv),
            v: self.v.map_coeffs(&mut conv),
        }
    }

    /// Sampled positivity check of `V` on a box; returns the first grid
    /// point (other than the origin) where `V <= 0`. Diagnostic only.
    pub fn sample_positivity(&self, region: &Region, grid: usize) -> Option<Vec<f64>> {
        let v = self.v.map_coeffs(|c| c.approx_f64());
        let mut found = None;
        for_each_grid_point(region.lo(), region.hi(), grid, |p| {
            if found.is_none() && p.iter().any(|c| *c != 0.0) && v.eval_unchecked(p) <= 0.0 {
                found = Some(p.to_vec());
            }
        });
        found
    }
}
