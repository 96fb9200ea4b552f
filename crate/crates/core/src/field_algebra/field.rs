use std::fmt;

use crate::scalar::Scalar;

use super::poly::{same_dim, PolyScalar};
use super::FieldError;

/// Polynomial vector field on R^n, one [`PolyScalar`] per coordinate.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyField<T> {
    components: Vec<PolyScalar<T>>,
}

impl<T: Scalar> PolyField<T> {
    pub fn new(components: Vec<PolyScalar<T>>) -> Result<Self, FieldError> {
        let n = components.len();
        if n == 0 {
            return Err(FieldError::Empty);
        }
        for c in &components {
            same_dim(n, c.dim())?;
        }
        Ok(PolyField { components })
    }

    pub fn zero(dim: usize) -> Self {
        PolyField {
            components: (0..dim).map(|_| PolyScalar::zero(dim)).collect(),
        }
    }

    /// Constant unit field along coordinate `index`.
    pub fn unit(dim: usize, index: usize) -> Self {
        let mut f = Self::zero(dim);
        f.components[index] = PolyScalar::constant(dim, T::one());
        f
    }

    /// Linear field `x -> A x` for a square row-major matrix.
    pub fn linear(matrix: &[Vec<T>]) -> Result<Self, FieldError> {
        let n = matrix.len();
        let mut comps = Vec::with_capacity(n);
        for row in matrix {
            same_dim(n, row.len())?;
            let mut p = PolyScalar::zero(n);
            for (j, a) in row.iter().enumerate() {
                p = &p + &PolyScalar::var(n, j).scale(a);
            }
            comps.push(p);
        }
        PolyField::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PolyScalar<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PolyScalar<T> {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(PolyScalar::is_zero)
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>, FieldError> {
        same_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> Vec<T> {
        self.components.iter().map(|c| c.eval_unchecked(x)).collect()
    }

    /// The directional derivative `XV = (DV) X = grad V . X`.
    pub fn apply_to_scalar(&self, v: &PolyScalar<T>) -> Result<PolyScalar<T>, FieldError> {
        same_dim(self.dim(), v.dim())?;
        let mut out = PolyScalar::zero(v.dim());
        for (i, xi) in self.components.iter().enumerate() {
            let d = v.partial(i);
            if d.is_zero() || xi.is_zero() {
                continue;
            }
            out = out.try_add(&d.try_mul(xi)?)?;
        }
        Ok(out)
    }

    /// `XY = (DY) X`, applied componentwise to the field `Y`.
    pub fn apply_to_field(&self, y: &PolyField<T>) -> Result<PolyField<T>, FieldError> {
        same_dim(self.dim(), y.dim())?;
        let comps = y
            .components
            .iter()
            .map(|c| self.apply_to_scalar(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyField { components: comps })
    }

    pub fn try_add(&self, rhs: &PolyField<T>) -> Result<PolyField<T>, FieldError> {
        same_dim(self.dim(), rhs.dim())?;
        let comps = self
            .components
            .iter()
            .zip(&rhs.components)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyField { components: comps })
    }

    pub fn scale(&self, c: &T) -> PolyField<T> {
        PolyField {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// `self + c * other`; used for `f + u g`.
    pub fn add_scaled(&self, c: &T, other: &PolyField<T>) -> Result<PolyField<T>, FieldError> {
        self.try_add(&other.scale(c))
    }

    pub fn neg(&self) -> PolyField<T> {
        self.scale(&-T::one())
    }

    pub fn embed(&self, new_dim: usize) -> PolyField<T> {
        let mut comps: Vec<_> = self.components.iter().map(|c| c.embed(new_dim)).collect();
        comps.resize_with(new_dim, || PolyScalar::zero(new_dim));
        PolyField { components: comps }
    }

    pub fn map_coeffs<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> PolyField<U> {
        PolyField {
            components: self.components.iter().map(|c| c.map_coeffs(&mut f)).collect(),
        }
    }
}

/// `[X, Y] = XY - YX = (DY) X - (DX) Y`.
pub fn lie_bracket<T: Scalar>(x: &PolyField<T>, y: &PolyField<T>) -> Result<PolyField<T>, FieldError> {
    let xy = x.apply_to_field(y)?;
    let yx = y.apply_to_field(x)?;
    xy.try_add(&yx.neg())
}

pub fn apply_to_scalar<T: Scalar>(x: &PolyField<T>, v: &PolyScalar<T>) -> Result<PolyScalar<T>, FieldError> {
    x.apply_to_scalar(v)
}

pub fn eval_field<T: Scalar>(x: &PolyField<T>, at: &[T]) -> Result<Vec<T>, FieldError> {
    x.eval(at)
}

/// The polynomial `Δ1(Δ2(...(Δk V)))`; the last field acts on `V` first.
pub fn iterated_scalar<T: Scalar>(
    fields: &[&PolyField<T>],
    v: &PolyScalar<T>,
) -> Result<PolyScalar<T>, FieldError> {
    let mut p = v.clone();
    for w in fields.iter().rev() {
        p = w.apply_to_scalar(&p)?;
    }
    Ok(p)
}

/// `(Δ1 Δ2 ... Δk V)(x)`; an empty list gives `V(x)`.
pub fn iterated_apply<T: Scalar>(
    fields: &[&PolyField<T>],
    v: &PolyScalar<T>,
    x: &[T],
) -> Result<T, FieldError> {
    iterated_scalar(fields, v)?.eval(x)
}

impl<T: Scalar> fmt::Display for PolyField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}
