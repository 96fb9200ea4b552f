use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

use super::FieldError;

/// Exponent multi-index of a monomial `x1^e1 * ... * xn^en`.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// vector compared lexicographically from `x1`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    fn product(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multivariate polynomial in `dim` variables with a canonical term map.
///
/// No stored coefficient is negligible (see [`Scalar::is_negligible`]), so
/// two polynomials are equal exactly when their term maps are equal.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyScalar<T> {
    dim: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> PolyScalar<T> {
    pub fn zero(dim: usize) -> Self {
        PolyScalar {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::from_terms(dim, [(Monomial::one(dim), c)])
    }

    /// The coordinate function `x_{index+1}` (zero-based index).
    pub fn var(dim: usize, index: usize) -> Self {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        let mut e = vec![0; dim];
        e[index] = 1;
        Self::from_terms(dim, [(Monomial(e), T::one())])
    }

    pub fn monomial(exponents: Vec<u32>, c: T) -> Self {
        let dim = exponents.len();
        Self::from_terms(dim, [(Monomial(exponents), c)])
    }

    /// Builds a polynomial from (monomial, coefficient) pairs, merging
    /// repeated monomials and dropping negligible coefficients.
    ///
    /// Panics if a monomial's length differs from `dim`.
    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, T)>,
    {
        let mut p = PolyScalar::zero(dim);
        for (m, c) in terms {
            assert_eq!(m.dim(), dim, "monomial length must equal polynomial dimension");
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: T) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if !c.is_negligible() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_negligible() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exponents: &[u32]) -> T {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coeff(&vec![0; self.dim])
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn has_linear_terms(&self) -> bool {
        self.terms.keys().any(|m| m.degree() == 1)
    }

    pub fn eval(&self, x: &[T]) -> Result<T, FieldError> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            acc = acc + c.clone() * monomial_value(m, x);
        }
        acc
    }

    /// Value together with the sum of absolute term values at `x`.
    ///
    /// The second component bounds the round-off scale of the first and is
    /// what relative zero tests compare against.
    pub fn eval_with_magnitude(&self, x: &[T]) -> Result<(T, T), FieldError> {
        self.check_point(x)?;
        let mut acc = T::zero();
        let mut mag = T::zero();
        for (m, c) in &self.terms {
            let t = c.clone() * monomial_value(m, x);
            mag = mag + t.magnitude();
            acc = acc + t;
        }
        Ok((acc, mag))
    }

    fn check_point(&self, x: &[T]) -> Result<(), FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Exact partial derivative with respect to the variable at `index`.
    pub fn partial(&self, index: usize) -> Self {
        assert!(index < self.dim, "variable index {index} out of range for dim {}", self.dim);
        let mut out = PolyScalar::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.0[index];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[index] -= 1;
            let factor = T::from_u32(e).expect("exponent fits in scalar");
            out.add_term(Monomial(exps), c.clone() * factor);
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|i| self.partial(i)).collect()
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = PolyScalar::zero(self.dim);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = PolyScalar::constant(self.dim, T::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Re-embeds into `new_dim >= dim` variables; the extra variables are
    /// appended after the existing ones.
    pub fn embed(&self, new_dim: usize) -> Self {
        assert!(new_dim >= self.dim, "cannot embed into fewer variables");
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = m.0.clone();
            e.resize(new_dim, 0);
            (Monomial(e), c.clone())
        });
        PolyScalar::from_terms(new_dim, terms)
    }

    /// Substitutes `x_{index+1} := value`, keeping the variable count.
    pub fn substitute(&self, index: usize, value: &T) -> Self {
        let mut out = PolyScalar::zero(self.dim);
        for (m, c) in &self.terms {
            let mut e = m.0.clone();
            let k = std::mem::replace(&mut e[index], 0);
            let mut f = c.clone();
            for _ in 0..k {
                f = f * value.clone();
            }
            out.add_term(Monomial(e), f);
        }
        out
    }

    /// Converts coefficients into another scalar type.
    pub fn map_coeffs<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> PolyScalar<U> {
        PolyScalar::from_terms(self.dim, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub(crate) fn try_add(&self, rhs: &Self) -> Result<Self, FieldError> {
        same_dim(self.dim, rhs.dim)?;
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub(crate) fn try_mul(&self, rhs: &Self) -> Result<Self, FieldError> {
        same_dim(self.dim, rhs.dim)?;
        let mut out = PolyScalar::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.product(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<(), FieldError> {
    if a == b {
        Ok(())
    } else {
        Err(FieldError::DimensionMismatch {
            expected: a,
            found: b,
        })
    }
}

fn monomial_value<T: Scalar>(m: &Monomial, x: &[T]) -> T {
    let mut v = T::one();
    for (xi, &e) in x.iter().zip(&m.0) {
        for _ in 0..e {
            v = v * xi.clone();
        }
    }
    v
}

// Operator impls panic on dimension mismatch; use the `try_*` / field-level
// API for fallible composition.
impl<T: Scalar> Add for &PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn add(self, rhs: Self) -> PolyScalar<T> {
        self.try_add(rhs).expect("polynomial dimensions must agree")
    }
}

impl<T: Scalar> Sub for &PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn sub(self, rhs: Self) -> PolyScalar<T> {
        self.try_add(&-rhs).expect("polynomial dimensions must agree")
    }
}

impl<T: Scalar> Mul for &PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn mul(self, rhs: Self) -> PolyScalar<T> {
        self.try_mul(rhs).expect("polynomial dimensions must agree")
    }
}

impl<T: Scalar> Neg for &PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn neg(self) -> PolyScalar<T> {
        PolyScalar {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl<T: Scalar> Add for PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn add(self, rhs: Self) -> PolyScalar<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn sub(self, rhs: Self) -> PolyScalar<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Mul for PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn mul(self, rhs: Self) -> PolyScalar<T> {
        &self * &rhs
    }
}

impl<T: Scalar> Neg for PolyScalar<T> {
    type Output = PolyScalar<T>;
    fn neg(self) -> PolyScalar<T> {
        -&self
    }
}

/// Prints highest-degree terms first, e.g. `-x1*x2^2 + 3*x1 - 0.5`.
///
/// The output re-parses to the same polynomial (see `parse`).
impl<T: Scalar> fmt::Display for PolyScalar<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = *c < T::zero();
            let abs = c.magnitude();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(k, &e)| {
                    if e == 1 {
                        format!("x{}", k + 1)
                    } else {
                        format!("x{}^{}", k + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{abs}")?;
            } else if abs == T::one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{abs}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}
