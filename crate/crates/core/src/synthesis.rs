//! The smooth feedback law and the two-phase bracket schedule.
//!
//! For the composed flow `R(t) = (X_{ρt} ∘ Y_t)(x)` with `X = f + u1 g`,
//! `Y = f + u2 g`, `u2 = -ρ u1`, the derivatives of `m(t) = V(R(t))` at
//! `t = 0` are
//!
//! ```text
//! m^(n)(0) = Σ_k C(n,k) ρ^k (Y^(n-k) X^k V)(x)
//! ```
//!
//! Expanding every `X`, `Y` into `f` and `g` turns each term into a word
//! over `{f, g}` applied to `V`. The word polynomials are cached per system,
//! so a candidate pair costs only a weighted sum of cached values.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::certificate::{Branch, Certificate, CertificateError, ToleranceMap};
use crate::field_algebra::{FieldError, PolyScalar};
use crate::generators::{GeneratorError, GeneratorId, Generators};
use crate::integrate::{CompiledPoly, Dynamics, IntegrateError, IntegratorConfig, PiecewiseConstant};
use crate::record::Record;
use crate::scalar::{Real, Scalar};
use crate::system::AffineSystem;

pub const DEFAULT_MAX_DERIVATIVE_ORDER: u32 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("smooth feedback not applicable: gV={gv}, fV={fv} (use the bracket schedule)")]
    NotApplicable { gv: f64, fv: f64 },
    #[error("derivative order {n} outside 1..={max}")]
    OrderOutOfRange { n: u32, max: u32 },
    #[error("rho must lie in (0, 1], got {0}")]
    InvalidRho(f64),
    #[error("branch {0} has no bracket synthesis")]
    WrongBranch(Branch),
    #[error("no (rho, u1) pair in the search grid gives a negative leading derivative (best margin {best_margin:?})")]
    SearchExhausted { best_margin: Option<f64> },
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("sigma must be positive")]
    NonPositiveSigma,
    #[error("no decrease found after {halvings} halvings of epsilon")]
    NoDecrease { halvings: u32 },
    #[error("the origin is excluded")]
    Origin,
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

/// `(ρ, u1)` with `u2 = -ρ u1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketPair<T> {
    rho: T,
    u1: T,
}

impl<T: Scalar> BracketPair<T> {
    pub fn new(rho: T, u1: T) -> Result<Self, SynthesisError> {
        if !(rho > T::zero() && rho <= T::one()) {
            return Err(SynthesisError::InvalidRho(rho.approx_f64()));
        }
        Ok(BracketPair { rho, u1 })
    }

    pub fn rho(&self) -> &T {
        &self.rho
    }

    pub fn u1(&self) -> &T {
        &self.u1
    }

    pub fn u2(&self) -> T {
        -(self.rho.clone() * self.u1.clone())
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    (0..k as u64).fold(1, |acc, i| acc * (n as u64 - i) / (i + 1))
}

/// Cached `(Z1 Z2 ... Zk V)` polynomials for words over `{f, g}`.
pub struct FlowJets<T> {
    sys: AffineSystem<T>,
    gens: Generators<T>,
    max_order: u32,
    // key: (length, bits); the most significant of `length` bits is the
    // outermost letter, a set bit means `g`
    words: RwLock<HashMap<(u32, u32), Arc<PolyScalar<T>>>>,
}

/// Values and term magnitudes of all words up to some length at one point.
pub struct JetValues<T> {
    // levels[len][bits]
    levels: Vec<Vec<(T, T)>>,
}

impl<T: Scalar> JetValues<T> {
    pub fn max_len(&self) -> u32 {
        self.levels.len() as u32 - 1
    }
}

impl<T: Scalar> FlowJets<T> {
    pub fn new(sys: &AffineSystem<T>) -> Self {
        Self::with_max_order(sys, DEFAULT_MAX_DERIVATIVE_ORDER)
    }

    pub fn with_max_order(sys: &AffineSystem<T>, max_order: u32) -> Self {
        FlowJets {
            sys: sys.clone(),
            gens: Generators::new(sys.f().clone(), sys.g().clone()).expect("system dimensions agree"),
            max_order,
            words: RwLock::new(HashMap::new()),
        }
    }

    pub fn system(&self) -> &AffineSystem<T> {
        &self.sys
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    fn check_order(&self, n: u32) -> Result<(), SynthesisError> {
        if n == 0 || n > self.max_order {
            return Err(SynthesisError::OrderOutOfRange { n, max: self.max_order });
        }
        Ok(())
    }

    fn word_poly(&self, len: u32, bits: u32) -> Result<Arc<PolyScalar<T>>, SynthesisError> {
        if len == 0 {
            return Ok(Arc::new(self.sys.v().clone()));
        }
        if let Some(hit) = self.words.read().unwrap().get(&(len, bits)) {
            return Ok(hit.clone());
        }
        let top = (bits >> (len - 1)) & 1 == 1;
        let inner = self.word_poly(len - 1, bits & ((1 << (len - 1)) - 1))?;
        let z = if top { self.sys.g() } else { self.sys.f() };
        let p = Arc::new(z.apply_to_scalar(&inner)?);
        let mut cache = self.words.write().unwrap();
        Ok(cache.entry((len, bits)).or_insert(p).clone())
    }

    /// Evaluates every word of length `<= n` at `x`.
    pub fn values_at(&self, x: &[T], n: u32) -> Result<JetValues<T>, SynthesisError> {
        self.check_order(n)?;
        let mut levels = vec![vec![self.sys.v().eval_with_magnitude(x)?]];
        for len in 1..=n {
            let mut lvl = Vec::with_capacity(1 << len);
            for bits in 0..(1u32 << len) {
                lvl.push(self.word_poly(len, bits)?.eval_with_magnitude(x)?);
            }
            levels.push(lvl);
        }
        Ok(JetValues { levels })
    }

    /// `m^(n)(0)` and the matching sum of absolute contributions.
    pub fn m_derivative_from(&self, vals: &JetValues<T>, pair: &BracketPair<T>, n: u32) -> Result<(T, T), SynthesisError> {
        if n == 0 || n > vals.max_len() {
            return Err(SynthesisError::OrderOutOfRange { n, max: vals.max_len() });
        }
        let powers = |base: T| {
            let mut p = vec![T::one()];
            for i in 0..n as usize {
                let next = p[i].clone() * base.clone();
                p.push(next);
            }
            p
        };
        let u1p = powers(pair.u1.clone());
        let u2p = powers(pair.u2());
        let rhop = powers(pair.rho.clone());
        let lvl = &vals.levels[n as usize];
        let mut acc = T::zero();
        let mut mag = T::zero();
        for k in 0..=n {
            let c = T::from_u64(binomial(n, k)).unwrap() * rhop[k as usize].clone();
            let low = (1u32 << k) - 1;
            let mut s = T::zero();
            let mut sm = T::zero();
            for (bits, (v, m)) in lvl.iter().enumerate() {
                let bits = bits as u32;
                let w = u2p[(bits >> k).count_ones() as usize].clone() * u1p[(bits & low).count_ones() as usize].clone();
                if w.is_zero() || v.is_zero() {
                    continue;
                }
                s = s + w.clone() * v.clone();
                sm = sm + (w * m.clone()).magnitude();
            }
            acc = acc + c.clone() * s;
            mag = mag + c * sm;
        }
        Ok((acc, mag))
    }

    pub fn m_derivative(&self, x: &[T], pair: &BracketPair<T>, n: u32) -> Result<T, SynthesisError> {
        let vals = self.values_at(x, n)?;
        Ok(self.m_derivative_from(&vals, pair, n)?.0)
    }

    /// `(λ_{κ,j} V)(x)`.
    pub fn generator_value(&self, id: GeneratorId, x: &[T]) -> Result<T, SynthesisError> {
        Ok(self.gens.get(id)?.field.apply_to_scalar(self.sys.v())?.eval(x)?)
    }
}

pub fn m_derivative<T: Scalar>(sys: &AffineSystem<T>, x: &[T], pair: &BracketPair<T>, n: u32) -> Result<T, SynthesisError> {
    FlowJets::new(sys).m_derivative(x, pair, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchPolicy {
    /// Tried in order; each in `(0, 1]`.
    pub rho_grid: Vec<f64>,
    /// Cap on `|u1|`.
    pub u_max: f64,
    /// Smallest `|u1|` on the descending ladder.
    pub u_min: f64,
    pub tol: ToleranceMap,
}

impl Default for SearchPolicy {
    fn default() -> Self {
        SearchPolicy {
            rho_grid: vec![1.0, 0.5, 0.25, 0.125],
            u_max: 2f64.powi(20),
            u_min: 2f64.powi(-20),
            tol: ToleranceMap::default(),
        }
    }
}

impl SearchPolicy {
    pub fn with_cap(mut self, u_max: f64) -> Self {
        self.u_max = u_max;
        self
    }

    fn small_ladder(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut m = self.u_max.min(1.0);
        while m >= self.u_min {
            out.push(m);
            m /= 2.0;
        }
        out
    }

    fn large_ladder(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut m = self.u_max.min(1.0);
        while m <= self.u_max && m > 0.0 {
            out.push(m);
            m *= 2.0;
        }
        out
    }

    /// Magnitudes to try: the ladder the branch calls for, then the other
    /// one as a fallback.
    pub fn magnitudes(&self, branch: Branch) -> Vec<f64> {
        let (first, second) = match branch {
            Branch::P2ii | Branch::P2iii => (self.large_ladder(), self.small_ladder()),
            _ => (self.small_ladder(), self.large_ladder()),
        };
        let mut out = Vec::new();
        if branch == Branch::P1 {
            out.push(0.0);
        }
        for m in first.into_iter().chain(second) {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }
}

/// Margin information for a candidate pair: lower derivatives all vanish,
/// and the value/magnitude of `m^(N+1)(0)`.
fn assess<T: Scalar>(
    jets: &FlowJets<T>,
    vals: &JetValues<T>,
    pair: &BracketPair<T>,
    n: u32,
    tol: &ToleranceMap,
) -> Result<(bool, f64, f64), SynthesisError> {
    for k in 1..=n {
        let (v, m) = jets.m_derivative_from(vals, pair, k)?;
        if !tol.is_zero(v.approx_f64(), m.approx_f64()) {
            return Ok((false, 0.0, 0.0));
        }
    }
    let (v, m) = jets.m_derivative_from(vals, pair, n + 1)?;
    Ok((true, v.approx_f64(), m.approx_f64()))
}

pub fn synthesize_pair_with<T: Scalar>(
    jets: &FlowJets<T>,
    x: &[T],
    cert: &Certificate,
    policy: &SearchPolicy,
) -> Result<BracketPair<T>, SynthesisError> {
    if !cert.branch.is_bracket() {
        return Err(SynthesisError::WrongBranch(cert.branch));
    }
    let n = cert.n.expect("bracket certificates carry N");
    let vals = jets.values_at(x, n + 1)?;
    let signs: Vec<f64> = if n % 2 == 0 {
        vec![1.0, -1.0]
    } else {
        let lead = jets.generator_value(GeneratorId::new(n + 1, n)?, x)?.approx_f64();
        if policy.tol.is_zero(lead, 1.0) || lead < 0.0 {
            vec![1.0, -1.0]
        } else {
            vec![-1.0, 1.0]
        }
    };
    let mags = policy.magnitudes(cert.branch);
    let mut best: Option<f64> = None;
    for &rho in &policy.rho_grid {
        let rho_t = T::from_f64(rho).expect("finite rho");
        for &mag in &mags {
            for &s in &signs {
                if mag == 0.0 && s < 0.0 {
                    continue;
                }
                let pair = BracketPair::new(rho_t.clone(), T::from_f64(s * mag).expect("finite u1"))?;
                let (lower_ok, top, top_mag) = assess(jets, &vals, &pair, n, &policy.tol)?;
                if !lower_ok {
                    continue;
                }
                best = Some(best.map_or(-top, |b: f64| b.max(-top)));
                if policy.tol.is_negative(top, top_mag) {
                    return Ok(pair);
                }
            }
        }
    }
    Err(SynthesisError::SearchExhausted { best_margin: best })
}

pub fn synthesize_pair<T: Scalar>(
    sys: &AffineSystem<T>,
    x: &[T],
    cert: &Certificate,
    policy: &SearchPolicy,
) -> Result<BracketPair<T>, SynthesisError> {
    synthesize_pair_with(&FlowJets::new(sys), x, cert, policy)
}

/// `u2` on `[0, t]`, `u1` on `(t, ε]` with `t = ε / (1 + ρ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlSchedule<T> {
    pub switch_time: T,
    pub first_value: T,
    pub second_value: T,
    pub end_time: T,
}

impl<T: Real> ControlSchedule<T> {
    pub fn value_at(&self, s: T) -> T {
        if s <= self.switch_time {
            self.first_value
        } else {
            self.second_value
        }
    }

    /// The schedule started at `t0`, followed by zero input from `t0 + ε` on.
    pub fn to_control(&self, t0: T) -> PiecewiseConstant<T> {
        PiecewiseConstant::new(
            vec![t0, t0 + self.switch_time, t0 + self.end_time],
            vec![self.first_value, self.second_value, T::zero()],
        )
        .expect("0 < switch < end")
    }
}

pub fn build_schedule<T: Real>(pair: &BracketPair<T>, epsilon: T) -> Result<ControlSchedule<T>, SynthesisError> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(SynthesisError::NonPositiveEpsilon);
    }
    Ok(ControlSchedule {
        switch_time: epsilon / (T::one() + pair.rho),
        first_value: pair.u2(),
        second_value: pair.u1,
        end_time: epsilon,
    })
}

/// The smooth law `u = -((fV + θ) / (gV)^2 + 1) gV`, or `0` when `gV`
/// vanishes and `fV < 0`.
#[derive(Clone, Debug)]
pub struct SontagLaw<T> {
    fv: CompiledPoly<T>,
    gv: CompiledPoly<T>,
    theta: CompiledPoly<T>,
}

impl<T: Real> SontagLaw<T> {
    pub fn new(sys: &AffineSystem<T>, theta: &PolyScalar<T>) -> Result<Self, SynthesisError> {
        if theta.dim() != sys.dim() {
            return Err(FieldError::DimensionMismatch {
                expected: sys.dim(),
                found: theta.dim(),
            }
            .into());
        }
        Ok(SontagLaw {
            fv: CompiledPoly::new(&sys.f().apply_to_scalar(sys.v())?),
            gv: CompiledPoly::new(&sys.g().apply_to_scalar(sys.v())?),
            theta: CompiledPoly::new(theta),
        })
    }

    pub fn eval(&self, x: &[T], tol: &ToleranceMap) -> Result<T, SynthesisError> {
        let (gv, gm) = self.gv.eval_with_magnitude(x);
        let (fv, fm) = self.fv.eval_with_magnitude(x);
        let (gv64, fv64) = (gv.approx_f64(), fv.approx_f64());
        if !tol.is_zero(gv64, gm.approx_f64()) {
            let th = self.theta.eval(x);
            return Ok(-((fv + th) / (gv * gv) + T::one()) * gv);
        }
        if tol.is_negative(fv64, fm.approx_f64()) {
            return Ok(T::zero());
        }
        Err(SynthesisError::NotApplicable { gv: gv64, fv: fv64 })
    }

    /// The first formula whenever `gV` is nonzero at all, ignoring the
    /// zero threshold.
    pub fn eval_unthresholded(&self, x: &[T]) -> Option<T> {
        let gv = self.gv.eval(x);
        (gv != T::zero()).then(|| -((self.fv.eval(x) + self.theta.eval(x)) / (gv * gv) + T::one()) * gv)
    }
}

pub fn sontag_feedback<T: Real>(
    sys: &AffineSystem<T>,
    theta: &PolyScalar<T>,
    x: &[T],
    tol: &ToleranceMap,
) -> Result<T, SynthesisError> {
    SontagLaw::new(sys, theta)?.eval(x, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    SmoothFeedback,
    Schedule,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisOutcome<T> {
    pub kind: OutcomeKind,
    pub u_value: Option<T>,
    pub pair: Option<BracketPair<T>>,
    pub schedule: Option<ControlSchedule<T>>,
    pub epsilon: T,
    /// `V(x) - V(π(end))`.
    pub decrease_margin: T,
    /// `max_s V(π(s)) / V(x)` over the probes.
    pub intersample_peak: T,
    pub halvings: u32,
}

impl<T: Real> SynthesisOutcome<T> {
    pub fn to_record(&self, point: &[f64]) -> Record {
        let mut r = Record::new();
        r.push_point("point", point);
        match self.kind {
            OutcomeKind::SmoothFeedback => {
                r.push("kind", "SmoothFeedback");
                r.push_f64("u", self.u_value.map_or(f64::NAN, |u| u.approx_f64()));
            }
            OutcomeKind::Schedule => {
                r.push("kind", "Schedule");
                if let Some(p) = &self.pair {
                    r.push_f64("rho", p.rho.approx_f64())
                        .push_f64("u1", p.u1.approx_f64())
                        .push_f64("u2", p.u2().approx_f64());
                }
                if let Some(s) = &self.schedule {
                    r.push_f64("switch_time", s.switch_time.approx_f64());
                }
            }
        }
        r.push_f64("epsilon", self.epsilon.approx_f64())
            .push_f64("decrease_margin", self.decrease_margin.approx_f64())
            .push_f64("intersample_peak", self.intersample_peak.approx_f64())
            .push("halvings", self.halvings);
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSearch<T> {
    pub max_halvings: u32,
    /// Probe points per trial (evenly spaced over the checked window).
    pub probes: usize,
    /// When set, each trial is checked over this whole window, with zero
    /// input after `ε`; `ε` never exceeds it.
    pub window: Option<T>,
    /// Inter-sample bound `V <= peak_factor * V(x)`.
    pub peak_factor: T,
}

impl<T: Real> Default for EpsilonSearch<T> {
    fn default() -> Self {
        EpsilonSearch {
            max_halvings: 30,
            probes: 32,
            window: None,
            peak_factor: T::lit(2.0),
        }
    }
}

/// Probe times on `[0, window]` (both ends included) merged with `extra`.
pub(crate) fn probe_times<T: Real>(window: T, probes: usize, extra: &[T]) -> Vec<T> {
    let probes = probes.max(1);
    let mut times: Vec<T> = (0..=probes)
        .map(|i| window * T::from_usize(i).unwrap() / T::from_usize(probes).unwrap())
        .collect();
    times.extend(extra.iter().copied().filter(|t| *t > T::zero() && *t < window));
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    times
}

pub(crate) struct Trial<T> {
    pub end_v: T,
    pub peak_v: T,
}

pub(crate) fn run_trial<T: Real>(
    dyn_: &Dynamics<T>,
    x: &[T],
    control: &PiecewiseConstant<T>,
    window: T,
    probes: usize,
    integ: &IntegratorConfig<T>,
) -> Result<Trial<T>, SynthesisError> {
    let times = probe_times(window, probes, control.breakpoints());
    let states = dyn_.flow(x, T::zero(), control, &times, integ)?;
    let peak_v = states.iter().map(|s| dyn_.lyapunov(s)).fold(T::neg_infinity(), T::max);
    let end_v = dyn_.lyapunov(states.last().unwrap());
    Ok(Trial { end_v, peak_v })
}

fn search_epsilon<T: Real>(
    dyn_: &Dynamics<T>,
    x: &[T],
    sigma: T,
    opts: &EpsilonSearch<T>,
    integ: &IntegratorConfig<T>,
    mut control_for: impl FnMut(T) -> Result<PiecewiseConstant<T>, SynthesisError>,
) -> Result<(T, u32, Trial<T>), SynthesisError> {
    if !(sigma > T::zero()) {
        return Err(SynthesisError::NonPositiveSigma);
    }
    if x.iter().all(|c| *c == T::zero()) {
        return Err(SynthesisError::Origin);
    }
    let v0 = dyn_.lyapunov(x);
    let mut eps = opts.window.map_or(sigma, |w| sigma.min(w));
    for h in 0..=opts.max_halvings {
        let window = opts.window.unwrap_or(eps);
        let trial = run_trial(dyn_, x, &control_for(eps)?, window, opts.probes, integ)?;
        if trial.end_v < v0 && trial.peak_v <= opts.peak_factor * v0 {
            return Ok((eps, h, trial));
        }
        eps = eps / T::lit(2.0);
    }
    Err(SynthesisError::NoDecrease {
        halvings: opts.max_halvings,
    })
}

pub fn select_epsilon_with<T: Real>(
    sys: &AffineSystem<T>,
    x: &[T],
    pair: &BracketPair<T>,
    sigma: T,
    integ: &IntegratorConfig<T>,
    opts: &EpsilonSearch<T>,
) -> Result<SynthesisOutcome<T>, SynthesisError> {
    let dyn_ = Dynamics::new(sys);
    let v0 = dyn_.lyapunov(x);
    let (eps, halvings, trial) = search_epsilon(&dyn_, x, sigma, opts, integ, |eps| {
        Ok(build_schedule(pair, eps)?.to_control(T::zero()))
    })?;
    Ok(SynthesisOutcome {
        kind: OutcomeKind::Schedule,
        u_value: None,
        pair: Some(pair.clone()),
        schedule: Some(build_schedule(pair, eps)?),
        epsilon: eps,
        decrease_margin: v0 - trial.end_v,
        intersample_peak: trial.peak_v / v0,
        halvings,
    })
}

/// Halves `ε` from `sigma` until the schedule built from `pair` decreases
/// `V` by time `ε` while keeping `V <= 2 V(x)` at every probe.
pub fn select_epsilon<T: Real>(
    sys: &AffineSystem<T>,
    x: &[T],
    pair: &BracketPair<T>,
    sigma: T,
    integ: &IntegratorConfig<T>,
) -> Result<SynthesisOutcome<T>, SynthesisError> {
    select_epsilon_with(sys, x, pair, sigma, integ, &EpsilonSearch::default())
}

/// The smooth-feedback counterpart of [`select_epsilon`]: constant `u`
/// from the smooth law, held for `ε`.
pub fn smooth_outcome<T: Real>(
    sys: &AffineSystem<T>,
    theta: &PolyScalar<T>,
    x: &[T],
    sigma: T,
    tol: &ToleranceMap,
    integ: &IntegratorConfig<T>,
    opts: &EpsilonSearch<T>,
) -> Result<SynthesisOutcome<T>, SynthesisError> {
    let u = sontag_feedback(sys, theta, x, tol)?;
    let dyn_ = Dynamics::new(sys);
    let v0 = dyn_.lyapunov(x);
    let (eps, halvings, trial) = search_epsilon(&dyn_, x, sigma, opts, integ, |_| Ok(PiecewiseConstant::constant(u)))?;
    Ok(SynthesisOutcome {
        kind: OutcomeKind::SmoothFeedback,
        u_value: Some(u),
        pair: None,
        schedule: None,
        epsilon: eps,
        decrease_margin: v0 - trial.end_v,
        intersample_peak: trial.peak_v / v0,
        halvings,
    })
}
