//! Point-wise classification of a system against the stabilizability
//! hypotheses, plus the bounded-growth check used for bounded controls.
//!
//! A quantity `v` is treated as zero when `|v| <= zero_tol * max(1, s)`,
//! where `s` is the sum of absolute term values of the polynomial that
//! produced `v` at the point. Strict signs use `strict_tol` the same way.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use thiserror::Error;

use crate::field_algebra::{FieldError, PolyScalar};
use crate::generators::{enumerate_tuple_ids, GeneratorError, GeneratorId, Generators, TupleBudget};
use crate::record::Record;
use crate::scalar::Scalar;
use crate::system::AffineSystem;

pub const DEFAULT_N_MAX: u32 = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("the origin is excluded: conditions only apply at x != 0")]
    Origin,
    #[error("n_max must be at least 1")]
    InvalidNMax,
    #[error("tolerances must be positive and finite")]
    InvalidTolerance,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("theta is negative at {0:?}")]
    NegativeTheta(Vec<f64>),
    #[error("xi is negative at s={0}")]
    NegativeXi(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceMap {
    zero_tol: f64,
    strict_tol: f64,
}

impl Default for ToleranceMap {
    fn default() -> Self {
        ToleranceMap {
            zero_tol: 1e-9,
            strict_tol: 1e-9,
        }
    }
}

impl ToleranceMap {
    pub fn new(zero_tol: f64, strict_tol: f64) -> Result<Self, CertificateError> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if ok(zero_tol) && ok(strict_tol) {
            Ok(ToleranceMap { zero_tol, strict_tol })
        } else {
            Err(CertificateError::InvalidTolerance)
        }
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn strict_tol(&self) -> f64 {
        self.strict_tol
    }

    pub fn is_zero(&self, v: f64, scale: f64) -> bool {
        v.abs() <= self.zero_tol * scale.max(1.0)
    }

    pub fn is_negative(&self, v: f64, scale: f64) -> bool {
        v < -self.strict_tol * scale.max(1.0)
    }

    pub fn is_positive(&self, v: f64, scale: f64) -> bool {
        v > self.strict_tol * scale.max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    GvNonzero,
    DriftNegative,
    P1,
    P2i,
    P2ii,
    P2iii,
    Unclassified,
}

impl Branch {
    pub fn is_bracket(&self) -> bool {
        matches!(self, Branch::P1 | Branch::P2i | Branch::P2ii | Branch::P2iii)
    }

    pub fn parse(s: &str) -> Option<Branch> {
        Some(match s {
            "GvNonzero" => Branch::GvNonzero,
            "DriftNegative" => Branch::DriftNegative,
            "P1" => Branch::P1,
            "P2i" => Branch::P2i,
            "P2ii" => Branch::P2ii,
            "P2iii" => Branch::P2iii,
            "Unclassified" => Branch::Unclassified,
            _ => return None,
        })
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Branch::GvNonzero => "GvNonzero",
            Branch::DriftNegative => "DriftNegative",
            Branch::P1 => "P1",
            Branch::P2i => "P2i",
            Branch::P2ii => "P2ii",
            Branch::P2iii => "P2iii",
            Branch::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub branch: Branch,
    pub n: Option<u32>,
    pub j: Option<u32>,
    /// Evaluated conditions keyed by name, e.g. `gV`, `f3V`, `lambda_3_2V`.
    pub diagnostics: BTreeMap<String, f64>,
}

impl Certificate {
    fn new(branch: Branch, n: Option<u32>, j: Option<u32>, diagnostics: BTreeMap<String, f64>) -> Self {
        Certificate {
            branch,
            n,
            j,
            diagnostics,
        }
    }

    pub fn to_record(&self, point: &[f64]) -> Record {
        let mut r = Record::new();
        r.push_point("point", point).push("branch", self.branch);
        if let Some(n) = self.n {
            r.push("N", n);
        }
        if let Some(j) = self.j {
            r.push("j", j);
        }
        for (k, v) in &self.diagnostics {
            r.push_f64(k.as_str(), *v);
        }
        r
    }
}

/// Outcome of a vanishing check; `witness` is the first non-vanishing tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Vanishing {
    pub holds: bool,
    pub checked: usize,
    pub witness: Option<(Vec<GeneratorId>, f64)>,
}

/// Name of `(Δ1 ... Δk V)`: `f3V` for powers of the drift, otherwise
/// `lambda_2_1V` or `(lambda_1_0,lambda_2_1)V`.
pub fn tuple_label(ids: &[GeneratorId]) -> String {
    if !ids.is_empty() && ids.iter().all(|id| *id == GeneratorId::drift()) {
        return if ids.len() == 1 {
            "fV".to_string()
        } else {
            format!("f{}V", ids.len())
        };
    }
    if ids.len() == 1 {
        return format!("{}V", ids[0]);
    }
    let inner: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
    format!("({})V", inner.join(","))
}

/// Caches the generator fields and every `Δ1 ... Δk V` polynomial for one
/// system. Cheap to share across threads.
pub struct Classifier<T> {
    sys: AffineSystem<T>,
    gens: Generators<T>,
    gv: PolyScalar<T>,
    tuples: RwLock<HashMap<Vec<GeneratorId>, Arc<PolyScalar<T>>>>,
}

impl<T: Scalar> Classifier<T> {
    pub fn new(sys: &AffineSystem<T>) -> Self {
        let gens = Generators::new(sys.f().clone(), sys.g().clone()).expect("system dimensions agree");
        let gv = sys.g().apply_to_scalar(sys.v()).expect("system dimensions agree");
        Classifier {
            sys: sys.clone(),
            gens,
            gv,
            tuples: RwLock::new(HashMap::new()),
        }
    }

    pub fn system(&self) -> &AffineSystem<T> {
        &self.sys
    }

    pub fn generators(&self) -> &Generators<T> {
        &self.gens
    }

    /// The polynomial `Δ1(Δ2(...(Δk V)))`.
    pub fn tuple_poly(&self, ids: &[GeneratorId]) -> Result<Arc<PolyScalar<T>>, CertificateError> {
        if ids.is_empty() {
            return Ok(Arc::new(self.sys.v().clone()));
        }
        if let Some(hit) = self.tuples.read().unwrap().get(ids) {
            return Ok(hit.clone());
        }
        let inner = self.tuple_poly(&ids[1..])?;
        let outer = self.gens.get(ids[0])?;
        let p = Arc::new(outer.field.apply_to_scalar(&inner)?);
        let mut cache = self.tuples.write().unwrap();
        Ok(cache.entry(ids.to_vec()).or_insert(p).clone())
    }

    /// Value and term-magnitude of `(Δ1 ... Δk V)(x)`.
    pub fn eval_tuple(&self, ids: &[GeneratorId], x: &[T]) -> Result<(f64, f64), CertificateError> {
        let (v, m) = self.tuple_poly(ids)?.eval_with_magnitude(x)?;
        Ok((v.approx_f64(), m.approx_f64()))
    }

    pub fn eval_gv(&self, x: &[T]) -> Result<(f64, f64), CertificateError> {
        let (v, m) = self.gv.eval_with_magnitude(x)?;
        Ok((v.approx_f64(), m.approx_f64()))
    }

    /// `(f^k V)(x)` with magnitude.
    pub fn eval_drift_power(&self, k: u32, x: &[T]) -> Result<(f64, f64), CertificateError> {
        self.eval_tuple(&vec![GeneratorId::drift(); k as usize], x)
    }

    /// `(λ_{κ,j} V)(x)` with magnitude.
    pub fn eval_generator(&self, id: GeneratorId, x: &[T]) -> Result<(f64, f64), CertificateError> {
        self.eval_tuple(&[id], x)
    }

    pub fn check_vanishing(
        &self,
        x: &[T],
        budget: TupleBudget,
        tol: &ToleranceMap,
    ) -> Result<Vanishing, CertificateError> {
        require_nonzero(x)?;
        let tuples = enumerate_tuple_ids(budget)?;
        for (i, t) in tuples.iter().enumerate() {
            let (v, m) = self.eval_tuple(t, x)?;
            if !tol.is_zero(v, m) {
                return Ok(Vanishing {
                    holds: false,
                    checked: i + 1,
                    witness: Some((t.clone(), v)),
                });
            }
        }
        Ok(Vanishing {
            holds: true,
            checked: tuples.len(),
            witness: None,
        })
    }

    pub fn classify_point(&self, x: &[T], tol: &ToleranceMap, n_max: u32) -> Result<Certificate, CertificateError> {
        require_nonzero(x)?;
        if n_max == 0 {
            return Err(CertificateError::InvalidNMax);
        }
        let mut diag = BTreeMap::new();
        let (gv, gm) = self.eval_gv(x)?;
        diag.insert("gV".to_string(), gv);
        if !tol.is_zero(gv, gm) {
            return Ok(Certificate::new(Branch::GvNonzero, None, None, diag));
        }
        let (fv, fm) = self.eval_drift_power(1, x)?;
        diag.insert("fV".to_string(), fv);
        if tol.is_negative(fv, fm) {
            return Ok(Certificate::new(Branch::DriftNegative, None, None, diag));
        }
        for n in 1..=n_max {
            let van = self.check_vanishing(x, TupleBudget::OrderAtMost(n), tol)?;
            if let Some((t, v)) = van.witness {
                diag.insert(tuple_label(&t), v);
                break;
            }
            let (top, tm) = self.eval_drift_power(n + 1, x)?;
            diag.insert(format!("f{}V", n + 1), top);
            if tol.is_negative(top, tm) {
                return Ok(Certificate::new(Branch::P1, Some(n), None, diag));
            }
            if tol.is_positive(top, tm) {
                continue;
            }
            if let Some(j) = self.find_p2i(x, n, tol, &mut diag)? {
                return Ok(Certificate::new(Branch::P2i, Some(n), Some(j), diag));
            }
            if let Some(j) = self.find_p2ii(x, n, tol, &mut diag)? {
                return Ok(Certificate::new(Branch::P2ii, Some(n), Some(j), diag));
            }
            if n % 2 == 0 {
                let id = GeneratorId::new(n + 1, n)?;
                let (l, lm) = self.eval_generator(id, x)?;
                diag.insert(tuple_label(&[id]), l);
                if tol.is_negative(l, lm) {
                    return Ok(Certificate::new(Branch::P2iii, Some(n), None, diag));
                }
            }
        }
        Ok(Certificate::new(Branch::Unclassified, None, None, diag))
    }

    /// `(λ_{N+1,j} V)(x) != 0` for odd `j`, evaluated and recorded.
    fn generator_nonzero(
        &self,
        x: &[T],
        n: u32,
        j: u32,
        tol: &ToleranceMap,
        diag: &mut BTreeMap<String, f64>,
    ) -> Result<bool, CertificateError> {
        let id = GeneratorId::new(n + 1, j)?;
        let (l, lm) = self.eval_generator(id, x)?;
        diag.insert(tuple_label(&[id]), l);
        Ok(!tol.is_zero(l, lm))
    }

    fn vanish_at_g_orders(
        &self,
        x: &[T],
        n: u32,
        qs: impl Iterator<Item = u32>,
        tol: &ToleranceMap,
        diag: &mut BTreeMap<String, f64>,
    ) -> Result<bool, CertificateError> {
        for q in qs {
            let budget = TupleBudget::OrderAndGOrder { order: n + 1, g_order: q };
            if let Some((t, v)) = self.check_vanishing(x, budget, tol)?.witness {
                diag.insert(tuple_label(&t), v);
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn find_p2i(
        &self,
        x: &[T],
        n: u32,
        tol: &ToleranceMap,
        diag: &mut BTreeMap<String, f64>,
    ) -> Result<Option<u32>, CertificateError> {
        for j in (1..=n).step_by(2) {
            if !self.generator_nonzero(x, n, j, tol, diag)? {
                continue;
            }
            // even q with 2 <= q < j; empty for j = 1
            if self.vanish_at_g_orders(x, n, (2..j).step_by(2), tol, diag)? {
                return Ok(Some(j));
            }
        }
        Ok(None)
    }

    fn find_p2ii(
        &self,
        x: &[T],
        n: u32,
        tol: &ToleranceMap,
        diag: &mut BTreeMap<String, f64>,
    ) -> Result<Option<u32>, CertificateError> {
        if n % 2 == 0 || n <= 2 {
            return Ok(None);
        }
        for j in (1..=n - 2).step_by(2) {
            if !self.generator_nonzero(x, n, j, tol, diag)? {
                continue;
            }
            if self.vanish_at_g_orders(x, n, (j + 1..n).filter(|q| q % 2 == 0), tol, diag)? {
                return Ok(Some(j));
            }
        }
        Ok(None)
    }

    /// The extra vanishing condition on tuples of total order `N+1` whose
    /// g-order is at most `N-1`, required for bounded controls.
    pub fn check_bounded_vanishing(
        &self,
        x: &[T],
        n: u32,
        tol: &ToleranceMap,
    ) -> Result<Vanishing, CertificateError> {
        self.check_vanishing(
            x,
            TupleBudget::OrderAndGOrderAtMost {
                order: n + 1,
                g_max: n - 1,
            },
            tol,
        )
    }

    /// Whether a certificate falls in the bounded-control regime: P1 and
    /// P2i always; P2i with `j = N` covers the strengthened P2ii; P2iii
    /// additionally needs [`Self::check_bounded_vanishing`].
    pub fn bounded_regime(&self, x: &[T], cert: &Certificate, tol: &ToleranceMap) -> Result<bool, CertificateError> {
        Ok(match cert.branch {
            Branch::GvNonzero | Branch::DriftNegative | Branch::P1 | Branch::P2i => true,
            Branch::P2ii | Branch::Unclassified => false,
            Branch::P2iii => {
                let n = cert.n.expect("P2iii carries N");
                self.check_bounded_vanishing(x, n, tol)?.holds
            }
        })
    }

    pub fn classify_many(
        &self,
        xs: &[Vec<T>],
        tol: &ToleranceMap,
        n_max: u32,
    ) -> Vec<Result<Certificate, CertificateError>> {
        xs.par_iter().map(|x| self.classify_point(x, tol, n_max)).collect()
    }
}

fn require_nonzero<T: Scalar>(x: &[T]) -> Result<(), CertificateError> {
    if x.iter().all(|c| c.is_zero()) {
        Err(CertificateError::Origin)
    } else {
        Ok(())
    }
}

pub fn classify_point<T: Scalar>(
    sys: &AffineSystem<T>,
    x: &[T],
    tol: &ToleranceMap,
    n_max: u32,
) -> Result<Certificate, CertificateError> {
    Classifier::new(sys).classify_point(x, tol, n_max)
}

pub fn check_vanishing<T: Scalar>(
    sys: &AffineSystem<T>,
    x: &[T],
    mode: TupleBudget,
    tol: &ToleranceMap,
) -> Result<Vanishing, CertificateError> {
    Classifier::new(sys).check_vanishing(x, mode, tol)
}

/// Axis-aligned box. Degenerate sides are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, CertificateError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(CertificateError::InvalidRegion("bounds must have equal nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(CertificateError::InvalidRegion("empty box".into()));
        }
        Ok(Region { lo, hi })
    }

    /// The cube `[-r, r]^dim`.
    pub fn centered(dim: usize, r: f64) -> Result<Self, CertificateError> {
        Region::new(vec![-r; dim], vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    /// Uniform grid with `grid` points per axis (endpoints included),
    /// first coordinate varying slowest.
    pub fn grid_points(&self, grid: usize) -> Result<Vec<Vec<f64>>, CertificateError> {
        if grid == 0 {
            return Err(CertificateError::InvalidRegion("grid must have at least one point per axis".into()));
        }
        let mut out = Vec::new();
        for_each_grid_point(&self.lo, &self.hi, grid, |p| out.push(p.to_vec()));
        Ok(out)
    }
}

pub(crate) fn for_each_grid_point(lo: &[f64], hi: &[f64], grid: usize, mut visit: impl FnMut(&[f64])) {
    if grid == 0 || lo.is_empty() {
        return;
    }
    let axis = |d: usize, i: usize| {
        if grid == 1 {
            lo[d]
        } else {
            lo[d] + (hi[d] - lo[d]) * i as f64 / (grid - 1) as f64
        }
    };
    let n = lo.len();
    let mut idx = vec![0usize; n];
    let mut p = vec![0.0; n];
    loop {
        for d in 0..n {
            p[d] = axis(d, idx[d]);
        }
        visit(&p);
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < grid {
                break;
            }
            idx[d] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundednessWitness {
    pub theta: PolyScalar<f64>,
    /// Univariate polynomial in `s = |ω|`.
    pub xi: PolyScalar<f64>,
    pub verified: bool,
    pub counterexample: Option<Vec<f64>>,
    pub points_checked: usize,
}

/// Checks `|(fV)(ω) + θ(ω)| <= ξ(|ω|) |(gV)(ω)|` on a grid over `region`.
pub fn check_bounded_growth(
    sys: &AffineSystem<f64>,
    theta: &PolyScalar<f64>,
    xi: &PolyScalar<f64>,
    region: &Region,
    grid: usize,
    tol: &ToleranceMap,
) -> Result<BoundednessWitness, CertificateError> {
    let n = sys.dim();
    if region.dim() != n {
        return Err(FieldError::DimensionMismatch {
            expected: n,
            found: region.dim(),
        }
        .into());
    }
    if theta.dim() != n {
        return Err(FieldError::DimensionMismatch {
            expected: n,
            found: theta.dim(),
        }
        .into());
    }
    if xi.dim() != 1 {
        return Err(FieldError::DimensionMismatch {
            expected: 1,
            found: xi.dim(),
        }
        .into());
    }
    let fv = sys.f().apply_to_scalar(sys.v())?;
    let gv = sys.g().apply_to_scalar(sys.v())?;
    let points = region.grid_points(grid)?;
    for w in &points {
        let (th, thm) = theta.eval_with_magnitude(w)?;
        if tol.is_negative(th, thm) {
            return Err(CertificateError::NegativeTheta(w.clone()));
        }
        let s = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (xs, xm) = xi.eval_with_magnitude(&[s])?;
        if tol.is_negative(xs, xm) {
            return Err(CertificateError::NegativeXi(s));
        }
    }
    let mut counterexample = None;
    for w in &points {
        let (a, am) = fv.eval_with_magnitude(w)?;
        let (th, thm) = theta.eval_with_magnitude(w)?;
        let (b, bm) = gv.eval_with_magnitude(w)?;
        let xs = xi.eval_unchecked(&[w.iter().map(|c| c * c).sum::<f64>().sqrt()]);
        let lhs = (a + th).abs();
        let rhs = xs.max(0.0) * b.abs();
        if lhs > rhs + tol.zero_tol() * (am + thm + xs.abs() * bm).max(1.0) {
            counterexample = Some(w.clone());
            break;
        }
    }
    Ok(BoundednessWitness {
        theta: theta.clone(),
        xi: xi.clone(),
        verified: counterexample.is_none(),
        counterexample,
        points_checked: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_algebra::PolyField;

    fn v2() -> PolyScalar<f64> {
        &PolyScalar::monomial(vec![2, 0], 1.0) + &PolyScalar::monomial(vec![0, 2], 1.0)
    }

    fn sys_with_f1(f1: PolyScalar<f64>) -> AffineSystem<f64> {
        let f = PolyField::new(vec![f1, PolyScalar::zero(2)]).unwrap();
        AffineSystem::new(f, PolyField::unit(2, 1), v2()).unwrap()
    }

    fn case1() -> AffineSystem<f64> {
        sys_with_f1(PolyScalar::monomial(vec![3, 0], -1.0))
    }

    fn case2i() -> AffineSystem<f64> {
        sys_with_f1(PolyScalar::monomial(vec![1, 1], 1.0))
    }

    fn case3() -> AffineSystem<f64> {
        sys_with_f1(PolyScalar::monomial(vec![1, 2], -1.0))
    }

    fn tol() -> ToleranceMap {
        ToleranceMap::default()
    }

    #[test]
    fn tolerance_scaling() {
        let t = tol();
        assert!(t.is_zero(1e-10, 0.0));
        assert!(!t.is_zero(1e-8, 1.0));
        assert!(t.is_zero(1e-8, 100.0));
        assert!(t.is_negative(-1e-8, 1.0));
        assert!(ToleranceMap::new(0.0, 1e-9).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = classify_point(&case1(), &[1.0, 0.0], &tol(), DEFAULT_N_MAX).unwrap();
        assert_eq!(c.branch, Branch::DriftNegative);
        assert_eq!(c.diagnostics["fV"], -2.0);

        let c = classify_point(&case2i(), &[1.0, 0.0], &tol(), DEFAULT_N_MAX).unwrap();
        assert_eq!((c.branch, c.n, c.j), (Branch::P2i, Some(1), Some(1)));
        assert_eq!(c.diagnostics["lambda_2_1V"], -2.0);

        let c = classify_point(&case3(), &[1.0, 0.0], &tol(), DEFAULT_N_MAX).unwrap();
        assert_eq!((c.branch, c.n, c.j), (Branch::P2iii, Some(2), None));
        assert_eq!(c.diagnostics["lambda_3_2V"], -4.0);

        let c = classify_point(&case3(), &[1.0, 1.0], &tol(), DEFAULT_N_MAX).unwrap();
        assert_eq!(c.branch, Branch::GvNonzero);
        assert_eq!(c.diagnostics["gV"], 2.0);
    }

    #[test]
    fn origin_is_rejected() {
        assert_eq!(
            classify_point(&case3(), &[0.0, 0.0], &tol(), 3),
            Err(CertificateError::Origin)
        );
    }

    #[test]
    fn unclassified_when_drift_pushes_out() {
        // f = (x1, 0): fV = 2 x1^2 > 0 on the x1 axis
        let sys = sys_with_f1(PolyScalar::var(2, 0));
        let c = classify_point(&sys, &[1.0, 0.0], &tol(), 4).unwrap();
        assert_eq!(c.branch, Branch::Unclassified);
    }

    #[test]
    fn vanishing_examples() {
        let x = [1.0, 0.0];
        assert!(check_vanishing(&case3(), &x, TupleBudget::OrderAtMost(2), &tol()).unwrap().holds);
        let bounded = TupleBudget::OrderAndGOrderAtMost { order: 3, g_max: 1 };
        assert!(check_vanishing(&case3(), &x, bounded, &tol()).unwrap().holds);
        let v = check_vanishing(&case2i(), &x, TupleBudget::OrderAtMost(2), &tol()).unwrap();
        assert!(!v.holds);
        let (t, val) = v.witness.unwrap();
        assert_eq!(t, vec![GeneratorId::new(2, 1).unwrap()]);
        assert_eq!(val, -2.0);
    }

    #[test]
    fn labels() {
        let d = GeneratorId::drift();
        let l = GeneratorId::new(2, 1).unwrap();
        assert_eq!(tuple_label(&[d]), "fV");
        assert_eq!(tuple_label(&[d, d, d]), "f3V");
        assert_eq!(tuple_label(&[l]), "lambda_2_1V");
        assert_eq!(tuple_label(&[d, l]), "(lambda_1_0,lambda_2_1)V");
    }

    #[test]
    fn bounded_growth_examples() {
        let theta = PolyScalar::monomial(vec![2, 2], 2.0);
        let region = Region::centered(2, 2.0).unwrap();
        let w = check_bounded_growth(&case3(), &theta, &PolyScalar::zero(1), &region, 21, &tol()).unwrap();
        assert!(w.verified);

        // f = (x1, 0): gV = 0 where fV > 0
        let sys = sys_with_f1(PolyScalar::var(2, 0));
        let region = Region::new(vec![1.0, -1.0], vec![2.0, 0.0]).unwrap();
        let xi = PolyScalar::constant(1, 100.0);
        let w = check_bounded_growth(&sys, &PolyScalar::zero(2), &xi, &region, 2, &tol()).unwrap();
        assert!(!w.verified);
        assert_eq!(w.counterexample, Some(vec![1.0, 0.0]));
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(vec![1.0], vec![0.0]).is_err());
        assert!(Region::new(vec![], vec![]).is_err());
        let r = Region::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(r.grid_points(2).unwrap(), vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert!(r.grid_points(0).is_err());
    }
}
