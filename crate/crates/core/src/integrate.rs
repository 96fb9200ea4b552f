//! Integration of `x' = f(x) + u(t) g(x)` under piecewise-constant inputs.
//!
//! Steps never straddle a control breakpoint or a requested output time:
//! the integrator restarts exactly at each of them.

use thiserror::Error;

use crate::field_algebra::{PolyField, PolyScalar};
use crate::scalar::Real;
use crate::system::AffineSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("state norm {norm:e} exceeded the blow-up bound at t={t}")]
    BlowUp { t: f64, norm: f64 },
    #[error("adaptive step underflow at t={t}")]
    StepUnderflow { t: f64 },
    #[error("invalid time span [{t0}, {t1}]")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid control: {0}")]
    InvalidControl(&'static str),
    #[error("initial state has length {found}, system dimension is {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method<T> {
    /// Classical fourth-order Runge-Kutta; each segment is split into the
    /// fewest equal steps no longer than `step`.
    Rk4 { step: T },
    /// Embedded Dormand-Prince 5(4) with error control.
    DormandPrince { rtol: T, atol: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    method: Method<T>,
    max_norm: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn rk4(step: T) -> Result<Self, IntegrateError> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(IntegrateError::InvalidConfig("step must be positive"));
        }
        Ok(IntegratorConfig {
            method: Method::Rk4 { step },
            max_norm: T::lit(1e8),
        })
    }

    pub fn dormand_prince(rtol: T, atol: T) -> Result<Self, IntegrateError> {
        if !(rtol > T::zero() && atol > T::zero()) {
            return Err(IntegrateError::InvalidConfig("tolerances must be positive"));
        }
        Ok(IntegratorConfig {
            method: Method::DormandPrince { rtol, atol },
            max_norm: T::lit(1e8),
        })
    }

    pub fn with_max_norm(mut self, max_norm: T) -> Result<Self, IntegrateError> {
        if !(max_norm > T::zero()) {
            return Err(IntegrateError::InvalidConfig("blow-up bound must be positive"));
        }
        self.max_norm = max_norm;
        Ok(self)
    }

    pub fn method(&self) -> Method<T> {
        self.method
    }

    pub fn max_norm(&self) -> T {
        self.max_norm
    }
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig::rk4(T::lit(0.005)).expect("positive default step")
    }
}

/// Right-continuous step function: `values[k]` on `[starts[k], starts[k+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant<T> {
    starts: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PiecewiseConstant<T> {
    pub fn constant(value: T) -> Self {
        PiecewiseConstant {
            starts: vec![T::neg_infinity()],
            values: vec![value],
        }
    }

    pub fn new(starts: Vec<T>, values: Vec<T>) -> Result<Self, IntegrateError> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(IntegrateError::InvalidControl("need one value per breakpoint"));
        }
        if starts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(IntegrateError::InvalidControl("breakpoints must increase strictly"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::InvalidControl("values must be finite"));
        }
        Ok(PiecewiseConstant { starts, values })
    }

    /// Value in force just after `t` (before the first breakpoint, the first value).
    pub fn value_at(&self, t: T) -> T {
        let k = self.starts.partition_point(|s| *s <= t);
        self.values[k.saturating_sub(1)]
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.starts
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Polynomial flattened for fast repeated evaluation.
#[derive(Clone, Debug)]
pub(crate) struct CompiledPoly<T> {
    terms: Vec<(T, Vec<(usize, i32)>)>,
}

impl<T: Real> CompiledPoly<T> {
    pub(crate) fn new(p: &PolyScalar<T>) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let powers = m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(i, e)| (i, *e as i32))
                    .collect();
                (*c, powers)
            })
            .collect();
        CompiledPoly { terms }
    }

    pub(crate) fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (c, powers) in &self.terms {
            let mut t = *c;
            for (i, e) in powers {
                t = t * if *e == 1 { x[*i] } else { x[*i].powi(*e) };
            }
            acc = acc + t;
        }
        acc
    }

    /// Value and sum of absolute term values.
    pub(crate) fn eval_with_magnitude(&self, x: &[T]) -> (T, T) {
        let mut acc = T::zero();
        let mut mag = T::zero();
        for (c, powers) in &self.terms {
            let mut t = *c;
            for (i, e) in powers {
                t = t * x[*i].powi(*e);
            }
            acc = acc + t;
            mag = mag + t.abs();
        }
        (acc, mag)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledField<T> {
    comps: Vec<CompiledPoly<T>>,
}

impl<T: Real> CompiledField<T> {
    pub(crate) fn new(f: &PolyField<T>) -> Self {
        CompiledField {
            comps: f.components().iter().map(CompiledPoly::new).collect(),
        }
    }
}

/// The vector field `f + u g` in compiled form.
#[derive(Clone, Debug)]
pub struct Dynamics<T> {
    f: CompiledField<T>,
    g: CompiledField<T>,
    v: CompiledPoly<T>,
    dim: usize,
}

impl<T: Real> Dynamics<T> {
    pub fn new(sys: &AffineSystem<T>) -> Self {
        Dynamics {
            f: CompiledField::new(sys.f()),
            g: CompiledField::new(sys.g()),
            v: CompiledPoly::new(sys.v()),
            dim: sys.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lyapunov(&self, x: &[T]) -> T {
        self.v.eval(x)
    }

    pub fn rhs(&self, x: &[T], u: T, out: &mut [T]) {
        for i in 0..self.dim {
            let gi = if u == T::zero() { T::zero() } else { self.g.comps[i].eval(x) };
            out[i] = self.f.comps[i].eval(x) + u * gi;
        }
    }

    /// States at each of `times` (sorted, all `>= t0`), starting from `x0`
    /// at `t0` under `control`.
    pub fn flow(
        &self,
        x0: &[T],
        t0: T,
        control: &PiecewiseConstant<T>,
        times: &[T],
        cfg: &IntegratorConfig<T>,
    ) -> Result<Vec<Vec<T>>, IntegrateError> {
        if x0.len() != self.dim {
            return Err(IntegrateError::Dimension {
                expected: self.dim,
                found: x0.len(),
            });
        }
        if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < t0) {
            return Err(IntegrateError::InvalidSpan {
                t0: t0.approx_f64(),
                t1: times.last().map_or(f64::NAN, |t| t.approx_f64()),
            });
        }
        let mut x = x0.to_vec();
        let mut t = t0;
        let mut out = Vec::with_capacity(times.len());
        let mut ws = Workspace::new(self.dim);
        let mut bp = control.starts.partition_point(|s| *s <= t0);
        for &target in times {
            while t < target {
                let next_bp = control.starts.get(bp).copied();
                let stop = match next_bp {
                    Some(b) if b < target => b,
                    _ => target,
                };
                let u = control.value_at(t);
                self.advance(&mut x, u, t, stop, cfg, &mut ws)?;
                t = stop;
                while bp < control.starts.len() && control.starts[bp] <= t {
                    bp += 1;
                }
            }
            out.push(x.clone());
        }
        Ok(out)
    }

    fn check(&self, x: &[T], t: T, cfg: &IntegratorConfig<T>) -> Result<(), IntegrateError> {
        let norm = x.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
        if !(norm <= cfg.max_norm) {
            return Err(IntegrateError::BlowUp {
                t: t.approx_f64(),
                norm: norm.approx_f64(),
            });
        }
        Ok(())
    }

    /// Integrates with constant input `u` from `t0` to exactly `t1`.
    fn advance(
        &self,
        x: &mut Vec<T>,
        u: T,
        t0: T,
        t1: T,
        cfg: &IntegratorConfig<T>,
        ws: &mut Workspace<T>,
    ) -> Result<(), IntegrateError> {
        let span = t1 - t0;
        if span <= T::zero() {
            return Ok(());
        }
        match cfg.method {
            Method::Rk4 { step } => {
                let n = (span / step).ceil().max(T::one());
                let steps = n.to_usize().unwrap_or(1);
                let h = span / n;
                for k in 0..steps {
                    self.rk4_step(x, u, h, ws);
                    self.check(x, t0 + h * T::from_usize(k + 1).unwrap(), cfg)?;
                }
            }
            Method::DormandPrince { rtol, atol } => {
                let mut t = t0;
                let mut h = span.min(T::lit(0.01));
                let floor = T::epsilon() * T::lit(16.0) * t1.abs().max(T::one());
                while t < t1 {
                    let last = t + h >= t1;
                    if last {
                        h = t1 - t;
                    }
                    let err = self.dp_step(x, u, h, rtol, atol, ws);
                    if err <= T::one() {
                        t = if last { t1 } else { t + h };
                        x.copy_from_slice(&ws.y5);
                        self.check(x, t, cfg)?;
                    }
                    let factor = if err == T::zero() {
                        T::lit(5.0)
                    } else {
                        (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                    };
                    h = h * factor;
                    if h < floor && t < t1 {
                        return Err(IntegrateError::StepUnderflow { t: t.approx_f64() });
                    }
                }
            }
        }
        Ok(())
    }

    fn rk4_step(&self, x: &mut [T], u: T, h: T, ws: &mut Workspace<T>) {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let n = self.dim;
        self.rhs(x, u, &mut ws.k[0]);
        for i in 0..n {
            ws.tmp[i] = x[i] + half * h * ws.k[0][i];
        }
        self.rhs(&ws.tmp, u, &mut ws.k[1]);
        for i in 0..n {
            ws.tmp[i] = x[i] + half * h * ws.k[1][i];
        }
        self.rhs(&ws.tmp, u, &mut ws.k[2]);
        for i in 0..n {
            ws.tmp[i] = x[i] + h * ws.k[2][i];
        }
        self.rhs(&ws.tmp, u, &mut ws.k[3]);
        for i in 0..n {
            x[i] = x[i] + h / T::lit(6.0) * (ws.k[0][i] + two * ws.k[1][i] + two * ws.k[2][i] + ws.k[3][i]);
        }
    }

    /// One Dormand-Prince attempt; leaves the fifth-order result in
    /// `ws.y5` and returns the scaled error norm.
    fn dp_step(&self, x: &[T], u: T, h: T, rtol: T, atol: T, ws: &mut Workspace<T>) -> T {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let n = self.dim;
        self.rhs(x, u, &mut ws.k[0]);
        for s in 0..6 {
            for i in 0..n {
                let mut acc = x[i];
                for (r, a) in A[s].iter().enumerate().take(s + 1) {
                    acc = acc + h * T::lit(*a) * ws.k[r][i];
                }
                ws.tmp[i] = acc;
            }
            self.rhs(&ws.tmp, u, &mut ws.k[s + 1]);
            if s == 5 {
                ws.y5.copy_from_slice(&ws.tmp);
            }
        }
        let mut err = T::zero();
        for i in 0..n {
            let mut e = T::zero();
            for (r, c) in E.iter().enumerate() {
                e = e + h * T::lit(*c) * ws.k[r][i];
            }
            let sc = atol + rtol * x[i].abs().max(ws.y5[i].abs());
            err = err + (e / sc) * (e / sc);
        }
        (err / T::from_usize(n).unwrap()).sqrt()
    }
}

struct Workspace<T> {
    k: Vec<Vec<T>>,
    tmp: Vec<T>,
    y5: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(n: usize) -> Self {
        Workspace {
            k: vec![vec![T::zero(); n]; 7],
            tmp: vec![T::zero(); n],
            y5: vec![T::zero(); n],
        }
    }
}

/// One recorded state with the input value in force from that time on.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub x: Vec<T>,
    pub u: T,
}

/// Sampled solution: `samples` at partition (or breakpoint) times, `dense`
/// at intermediate probe times, both in time order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    pub dense: Vec<Sample<T>>,
}

impl<T> Default for Trajectory<T> {
    fn default() -> Self {
        Trajectory {
            samples: Vec::new(),
            dense: Vec::new(),
        }
    }
}

/// Solves over `span`, recording a sample at the start, at every control
/// breakpoint inside the span and at the end.
pub fn integrate<T: Real>(
    sys: &AffineSystem<T>,
    control: &PiecewiseConstant<T>,
    x0: &[T],
    span: (T, T),
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, IntegrateError> {
    let (t0, t1) = span;
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(IntegrateError::InvalidSpan {
            t0: t0.approx_f64(),
            t1: t1.approx_f64(),
        });
    }
    let mut times = vec![t0];
    times.extend(control.breakpoints().iter().copied().filter(|b| *b > t0 && *b < t1));
    times.push(t1);
    let states = Dynamics::new(sys).flow(x0, t0, control, &times, cfg)?;
    let samples = times
        .into_iter()
        .zip(states)
        .map(|(t, x)| Sample {
            t,
            u: control.value_at(t),
            x,
        })
        .collect();
    Ok(Trajectory {
        samples,
        dense: Vec::new(),
    })
}
