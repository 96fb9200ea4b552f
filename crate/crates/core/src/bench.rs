//! The benchmark family on `R^n x R`:
//!
//! ```text
//! f(x, y) = (a(x) + y β(x) + y² γ(x) + y³ δ(x), 0),  g = (0, 1),  V = W(x) + y²
//! ```
//!
//! `a, β, γ, δ` are polynomial vector fields on `R^n` (scalars when `n = 1`).
//! On the axis `y = 0` the system exercises each branch of the classifier,
//! depending on which of the sets `E1..E5` the point `x` falls in.

use std::fmt;

use thiserror::Error;

use crate::certificate::{Region, ToleranceMap};
use crate::field_algebra::{lie_bracket, FieldError, PolyField, PolyScalar};
use crate::generators::{GeneratorId, Generators};
use crate::record::Record;
use crate::scalar::Scalar;
use crate::system::{AffineSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("a(0) must be 0")]
    DriftNotZeroAtOrigin,
    #[error("W must vanish at 0 and have no linear terms")]
    BadW,
    #[error("region must have dimension {expected}, found {found}")]
    RegionDimension { expected: usize, found: usize },
    #[error("the origin is excluded")]
    Origin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseFamilySpec<T> {
    a: PolyField<T>,
    beta: PolyField<T>,
    gamma: PolyField<T>,
    delta: PolyField<T>,
    w: PolyScalar<T>,
}

impl<T: Scalar> CaseFamilySpec<T> {
    pub fn new(
        a: PolyField<T>,
        beta: PolyField<T>,
        gamma: PolyField<T>,
        delta: PolyField<T>,
        w: PolyScalar<T>,
    ) -> Result<Self, BenchError> {
        let n = a.dim();
        for found in [beta.dim(), gamma.dim(), delta.dim(), w.dim()] {
            if found != n {
                return Err(FieldError::DimensionMismatch { expected: n, found }.into());
            }
        }
        if a.components().iter().any(|c| !c.constant_term().is_negligible()) {
            return Err(BenchError::DriftNotZeroAtOrigin);
        }
        if !w.constant_term().is_negligible() || w.has_linear_terms() {
            return Err(BenchError::BadW);
        }
        Ok(CaseFamilySpec {
            a,
            beta,
            gamma,
            delta,
            w,
        })
    }

    /// One-dimensional `x` block with scalar coefficient functions.
    pub fn scalar(
        a: PolyScalar<T>,
        beta: PolyScalar<T>,
        gamma: PolyScalar<T>,
        delta: PolyScalar<T>,
        w: PolyScalar<T>,
    ) -> Result<Self, BenchError> {
        let lift = |p: PolyScalar<T>| PolyField::new(vec![p]);
        Self::new(lift(a)?, lift(beta)?, lift(gamma)?, lift(delta)?, w)
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &PolyField<T> {
        &self.a
    }

    pub fn beta(&self) -> &PolyField<T> {
        &self.beta
    }

    pub fn gamma(&self) -> &PolyField<T> {
        &self.gamma
    }

    pub fn delta(&self) -> &PolyField<T> {
        &self.delta
    }

    pub fn w(&self) -> &PolyScalar<T> {
        &self.w
    }

    /// `θ(x, y) = -(aW)(x)`, the choice that makes the growth bound hold.
    pub fn theta(&self) -> PolyScalar<T> {
        let aw = self.a.apply_to_scalar(&self.w).expect("dimensions checked");
        (-aw).embed(self.n() + 1)
    }

    pub fn map_coeffs<U: Scalar>(&self, mut conv: impl FnMut(&T) -> U) -> CaseFamilySpec<U> {
        CaseFamilySpec {
            a: self.a.map_coeffs(&mut conv),
            beta: self.beta.map_coeffs(&mut conv),
            gamma: self.gamma.map_coeffs(&mut conv),
            delta: self.delta.map_coeffs(&mut conv),
            w: self.w.map_coeffs(&mut conv),
        }
    }
}

pub fn build_case_system<T: Scalar>(spec: &CaseFamilySpec<T>) -> Result<AffineSystem<T>, BenchError> {
    let n = spec.n();
    let m = n + 1;
    let y = PolyScalar::var(m, n);
    let y2 = &y * &y;
    let y3 = &y2 * &y;
    let mut comps = Vec::with_capacity(m);
    for i in 0..n {
        let mut c = spec.a.component(i).embed(m);
        for (coef, field) in [(&y, &spec.beta), (&y2, &spec.gamma), (&y3, &spec.delta)] {
            c = &c + &(coef * &field.component(i).embed(m));
        }
        comps.push(c);
    }
    comps.push(PolyScalar::zero(m));
    let f = PolyField::new(comps)?;
    let g = PolyField::unit(m, n);
    let v = &spec.w.embed(m) + &y2;
    Ok(AffineSystem::new(f, g, v)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ESetLabel {
    E1,
    E2,
    E3,
    E4,
    E5,
    None,
}

impl fmt::Display for ESetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ESetLabel::E1 => "E1",
            ESetLabel::E2 => "E2",
            ESetLabel::E3 => "E3",
            ESetLabel::E4 => "E4",
            ESetLabel::E5 => "E5",
            ESetLabel::None => "None",
        };
        f.write_str(s)
    }
}

/// The scalar quantities the E-sets are defined by, as polynomials on `R^n`.
pub struct ESetQuantities<T> {
    pub aw: PolyScalar<T>,
    pub beta_w: PolyScalar<T>,
    pub gamma_w: PolyScalar<T>,
    pub delta_w: PolyScalar<T>,
    pub a_gamma_a_w: PolyScalar<T>,
    pub a_delta_w: PolyScalar<T>,
    pub beta_gamma_w: PolyScalar<T>,
}

impl<T: Scalar> ESetQuantities<T> {
    pub fn new(spec: &CaseFamilySpec<T>) -> Result<Self, BenchError> {
        let w = &spec.w;
        let ag = lie_bracket(&spec.a, &spec.gamma)?;
        Ok(ESetQuantities {
            aw: spec.a.apply_to_scalar(w)?,
            beta_w: spec.beta.apply_to_scalar(w)?,
            gamma_w: spec.gamma.apply_to_scalar(w)?,
            delta_w: spec.delta.apply_to_scalar(w)?,
            a_gamma_a_w: lie_bracket(&ag, &spec.a)?.apply_to_scalar(w)?,
            a_delta_w: lie_bracket(&spec.a, &spec.delta)?.apply_to_scalar(w)?,
            beta_gamma_w: lie_bracket(&spec.beta, &spec.gamma)?.apply_to_scalar(w)?,
        })
    }
}

fn eval_mag<T: Scalar>(p: &PolyScalar<T>, x: &[T]) -> Result<(f64, f64), BenchError> {
    let (v, m) = p.eval_with_magnitude(x)?;
    Ok((v.approx_f64(), m.approx_f64()))
}

/// First of `E1..E5` containing `x`, in that order.
pub fn classify_e<T: Scalar>(spec: &CaseFamilySpec<T>, x: &[T], tol: &ToleranceMap) -> Result<ESetLabel, BenchError> {
    if x.iter().all(|c| c.is_zero()) {
        return Err(BenchError::Origin);
    }
    let q = ESetQuantities::new(spec)?;
    let zero = |p: &PolyScalar<T>| -> Result<bool, BenchError> {
        let (v, m) = eval_mag(p, x)?;
        Ok(tol.is_zero(v, m))
    };
    let (aw, awm) = eval_mag(&q.aw, x)?;
    if tol.is_negative(aw, awm) {
        return Ok(ESetLabel::E1);
    }
    let aw_nonpos = !tol.is_positive(aw, awm);
    if aw_nonpos && !zero(&q.beta_w)? {
        return Ok(ESetLabel::E2);
    }
    if !tol.is_zero(aw, awm) || !zero(&q.beta_w)? {
        return Ok(ESetLabel::None);
    }
    let (gw, gwm) = eval_mag(&q.gamma_w, x)?;
    if tol.is_negative(gw, gwm) {
        return Ok(ESetLabel::E3);
    }
    if !tol.is_zero(gw, gwm) {
        return Ok(ESetLabel::None);
    }
    if !zero(&q.delta_w)? {
        return Ok(ESetLabel::E4);
    }
    if zero(&q.a_gamma_a_w)? && !zero(&q.a_delta_w)? {
        return Ok(ESetLabel::E5);
    }
    Ok(ESetLabel::None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Identity as written, e.g. `lambda_3_2V = 2 gammaW`.
    pub statement: &'static str,
    pub max_mismatch: f64,
    /// Largest magnitude of the generator side, to tell trivial `0 = 0`
    /// agreements apart.
    pub max_value: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseClaimReport {
    pub checks: Vec<IdentityCheck>,
}

impl CaseClaimReport {
    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_records(&self) -> Vec<Record> {
        self.checks
            .iter()
            .map(|c| {
                let mut r = Record::new();
                r.push("identity", c.name)
                    .push("statement", c.statement)
                    .push_f64("max_mismatch", c.max_mismatch)
                    .push_f64("max_value", c.max_value)
                    .push("points", c.points);
                r
            })
            .collect()
    }
}

/// Compares generator values of the built system against the closed forms
/// in `a, β, γ, δ, W` at grid points `(x, 0)` with `x` on `region`.
///
/// `lambda_5_3` is checked twice: against the single-word value
/// `6 [a,δ]W` and against the full three-word sum
/// `18 [a,δ]W + 4 [β,γ]W`.
pub fn verify_case_claims(
    spec: &CaseFamilySpec<f64>,
    region: &Region,
    grid: usize,
) -> Result<CaseClaimReport, BenchError> {
    let n = spec.n();
    if region.dim() != n {
        return Err(BenchError::RegionDimension {
            expected: n,
            found: region.dim(),
        });
    }
    let sys = build_case_system(spec)?;
    let gens = Generators::new(sys.f().clone(), sys.g().clone()).expect("dimensions agree");
    let lam = |k: u32, j: u32| -> Result<PolyScalar<f64>, BenchError> {
        let id = GeneratorId::new(k, j).expect("valid id");
        Ok(gens.get(id).expect("valid id").field.apply_to_scalar(sys.v())?)
    };
    let q = ESetQuantities::new(spec)?;
    let cases: [(&'static str, &'static str, PolyScalar<f64>, PolyScalar<f64>); 5] = [
        ("lambda_2_1", "lambda_2_1V = -betaW", lam(2, 1)?, -&q.beta_w),
        ("lambda_3_2", "lambda_3_2V = 2 gammaW", lam(3, 2)?, q.gamma_w.scale(&2.0)),
        ("lambda_4_3", "lambda_4_3V = -6 deltaW", lam(4, 3)?, q.delta_w.scale(&-6.0)),
        ("lambda_5_3", "lambda_5_3V = 6 [a,delta]W", lam(5, 3)?, q.a_delta_w.scale(&6.0)),
        (
            "lambda_5_3_full",
            "lambda_5_3V = 18 [a,delta]W + 4 [beta,gamma]W",
            lam(5, 3)?,
            &q.a_delta_w.scale(&18.0) + &q.beta_gamma_w.scale(&4.0),
        ),
    ];
    let points = region.grid_points(grid).map_err(|_| BenchError::RegionDimension {
        expected: n,
        found: 0,
    })?;
    let mut checks = Vec::new();
    for (name, statement, lhs, rhs) in cases {
        let mut max_mismatch: f64 = 0.0;
        let mut max_value: f64 = 0.0;
        for x in &points {
            let mut p = x.clone();
            p.push(0.0);
            let l = lhs.eval(&p)?;
            let r = rhs.eval(x)?;
            max_mismatch = max_mismatch.max((l - r).abs());
            max_value = max_value.max(l.abs());
        }
        checks.push(IdentityCheck {
            name,
            statement,
            max_mismatch,
            max_value,
            points: points.len(),
        });
    }
    Ok(CaseClaimReport { checks })
}

/// A named benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchCase {
    pub name: &'static str,
    pub spec: CaseFamilySpec<f64>,
    pub system: AffineSystem<f64>,
    pub theta: PolyScalar<f64>,
}

pub const REGISTRY: [&str; 5] = ["case1", "case2i", "case3", "case4", "case5"];

fn x1(p: PolyScalar<f64>) -> PolyField<f64> {
    PolyField::new(vec![p]).expect("one component")
}

/// The spec behind each registry entry.
pub fn registry_spec(name: &str) -> Option<CaseFamilySpec<f64>> {
    let x = PolyScalar::var(1, 0);
    let w1 = PolyScalar::monomial(vec![2], 1.0);
    let z1 = PolyField::zero(1);
    let spec = match name {
        // a = -x^3: E1 everywhere
        "case1" => CaseFamilySpec::new(x1(PolyScalar::monomial(vec![3], -1.0)), z1.clone(), z1.clone(), z1, w1),
        // β = x: E2
        "case2i" => CaseFamilySpec::new(z1.clone(), x1(x), z1.clone(), z1, w1),
        // γ = -x: E3
        "case3" => CaseFamilySpec::new(z1.clone(), z1.clone(), x1(-x), z1, w1),
        // δ = x: E4
        "case4" => CaseFamilySpec::new(z1.clone(), z1.clone(), z1, x1(x), w1),
        // rotation a = (-x2, x1), δ = (x2, 0), W = |x|^2: E5 on the coordinate
        // axes, where δW = 2 x1 x2 vanishes
        "case5" => {
            let z2 = PolyField::zero(2);
            let a = PolyField::linear(&[vec![0.0, -1.0], vec![1.0, 0.0]]).expect("square");
            let delta = PolyField::new(vec![PolyScalar::var(2, 1), PolyScalar::zero(2)]).expect("two components");
            let w = &PolyScalar::monomial(vec![2, 0], 1.0) + &PolyScalar::monomial(vec![0, 2], 1.0);
            CaseFamilySpec::new(a, z2.clone(), z2, delta, w)
        }
        _ => return None,
    };
    Some(spec.expect("registry specs are valid"))
}

pub fn registry(name: &str) -> Option<BenchCase> {
    let spec = registry_spec(name)?;
    let system = build_case_system(&spec).expect("registry specs build");
    let theta = spec.theta();
    let name = REGISTRY.iter().find(|n| **n == name)?;
    Some(BenchCase {
        name,
        spec,
        system,
        theta,
    })
}
