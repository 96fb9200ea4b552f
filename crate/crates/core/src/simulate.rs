//! The sampled-data closed loop and its verification.
//!
//! At each partition time the controller is resolved from the frozen
//! state. Candidates are the smooth law (held over the interval, or over a
//! halved prefix followed by zero input) and bracket schedules of length
//! `ε` inside the interval, again followed by zero input. Each candidate is
//! simulated over the whole interval and the best verified one is applied.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::certificate::{Branch, Certificate, CertificateError, Classifier, Region, ToleranceMap, DEFAULT_N_MAX};
use crate::field_algebra::PolyScalar;
use crate::integrate::{Dynamics, IntegrateError, IntegratorConfig, PiecewiseConstant, Sample, Trajectory};
use crate::record::{format_f64, Record};
use crate::scalar::Real;
use crate::synthesis::{
    build_schedule, probe_times, run_trial, synthesize_pair_with, BracketPair, FlowJets, Trial, SearchPolicy, SontagLaw,
    SynthesisError,
};
use crate::system::AffineSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid partition: {0}")]
    Partition(&'static str),
    #[error("controller failure at t={t} (x={x:?}): {reason}")]
    ControllerFailure { t: f64, x: Vec<f64>, reason: String },
    #[error("integration failed at t={t}: {source}")]
    Numerical { t: f64, source: IntegrateError },
    #[error("initial state has length {found}, system dimension is {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("trajectory csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("empty trajectory")]
    EmptyTrajectory,
}

/// Sampling times `0 = T_1 < T_2 < ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    times: Vec<T>,
    gap_bound: T,
}

impl<T: Real> Partition<T> {
    pub fn new(times: Vec<T>) -> Result<Self, SimError> {
        if times.len() < 2 {
            return Err(SimError::Partition("need at least two times"));
        }
        if times[0] != T::zero() {
            return Err(SimError::Partition("first time must be 0"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(SimError::Partition("times must increase strictly"));
        }
        let gap_bound = times.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), T::max);
        Ok(Partition { times, gap_bound })
    }

    /// `0, Δ, 2Δ, ...` up to the horizon; the last gap may be shorter.
    pub fn uniform(dt: T, horizon: T) -> Result<Self, SimError> {
        if !(dt > T::zero()) || !(horizon > T::zero()) || !dt.is_finite() || !horizon.is_finite() {
            return Err(SimError::Partition("dt and horizon must be positive"));
        }
        let n = (horizon / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
        let mut times: Vec<T> = (0..n).map(|k| dt * T::from_usize(k).unwrap()).collect();
        times.push(horizon);
        Partition::new(times)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn gap_bound(&self) -> T {
        self.gap_bound
    }

    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopConfig<T> {
    pub tol: ToleranceMap,
    pub n_max: u32,
    pub policy: SearchPolicy,
    pub integ: IntegratorConfig<T>,
    /// Probe points per sampling interval.
    pub probes: usize,
    pub max_halvings: u32,
    /// Looser tolerances for certifying a bracket schedule near `gV = 0`,
    /// where the smooth law alone decreases `V` very slowly.
    pub band: Option<ToleranceMap>,
}

const ESCALATION_HALVINGS: u32 = 4;

impl<T: Real> Default for ClosedLoopConfig<T> {
    fn default() -> Self {
        ClosedLoopConfig {
            tol: ToleranceMap::default(),
            n_max: DEFAULT_N_MAX,
            policy: SearchPolicy::default(),
            integ: IntegratorConfig::default(),
            probes: 32,
            max_halvings: 30,
            band: Some(ToleranceMap::new(1e-3, 1e-3).expect("valid tolerances")),
        }
    }
}

/// Control chosen for one sampling interval, in interval-local time.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision<T> {
    pub branch: Option<Branch>,
    pub control: PiecewiseConstant<T>,
    pub epsilon: Option<T>,
}

/// Per-system controller state shared by every run on that system.
pub struct Controller<T> {
    sys: AffineSystem<T>,
    classifier: Classifier<T>,
    jets: FlowJets<T>,
    sontag: SontagLaw<T>,
    dynamics: Dynamics<T>,
    cfg: ClosedLoopConfig<T>,
}

impl<T: Real> Controller<T> {
    pub fn new(sys: &AffineSystem<T>, theta: &PolyScalar<T>, cfg: ClosedLoopConfig<T>) -> Result<Self, SimError> {
        Ok(Controller {
            sys: sys.clone(),
            classifier: Classifier::new(sys),
            jets: FlowJets::with_max_order(sys, cfg.n_max + 1),
            sontag: SontagLaw::new(sys, theta)?,
            dynamics: Dynamics::new(sys),
            cfg,
        })
    }

    pub fn system(&self) -> &AffineSystem<T> {
        &self.sys
    }

    pub fn config(&self) -> &ClosedLoopConfig<T> {
        &self.cfg
    }

    pub fn dynamics(&self) -> &Dynamics<T> {
        &self.dynamics
    }

    /// Resolves the control for an interval of length `len` from state `x`.
    ///
    /// Every admissible candidate is simulated over the whole interval and
    /// the verified one (`V` decreases, peak `<= 2 V(x)`) with the lowest
    /// end value wins. Candidates are the smooth law, the bracket schedule
    /// of the strict certificate, and, when the strict certificate is not a
    /// bracket branch, the bracket schedule certified under `band`.
    pub fn decide(&self, x: &[T], len: T) -> Result<Decision<T>, String> {
        if x.iter().all(|c| *c == T::zero()) {
            return Ok(Decision {
                branch: None,
                control: PiecewiseConstant::constant(T::zero()),
                epsilon: None,
            });
        }
        let v0 = self.dynamics.lyapunov(x);
        let strict = self
            .classifier
            .classify_point(x, &self.cfg.tol, self.cfg.n_max)
            .map_err(|e: CertificateError| e.to_string())?;
        let mut best: Option<(Decision<T>, T)> = None;
        let mut fallback: Option<Decision<T>> = None;
        let mut failure = None;
        let mut offer = |d: Decision<T>, end_v: T| {
            if best.as_ref().is_none_or(|(_, b)| end_v < *b) {
                best = Some((d, end_v));
            }
        };
        // (u, certified): below the zero threshold a nonzero `gV` still
        // gives a candidate, kept only if it verifies
        let smooth = match strict.branch {
            Branch::GvNonzero | Branch::DriftNegative => {
                Some((self.sontag.eval(x, &self.cfg.tol).map_err(|e| e.to_string())?, true))
            }
            _ => self.sontag.eval_unthresholded(x).map(|u| (u, false)),
        };
        let mut bracket = Vec::new();
        if strict.branch.is_bracket() {
            bracket.push((strict.clone(), self.cfg.tol));
        } else if let Some(band) = self.cfg.band {
            let loose = self
                .classifier
                .classify_point(x, &band, self.cfg.n_max)
                .map_err(|e| e.to_string())?;
            if loose.branch.is_bracket() {
                bracket.push((loose, band));
            }
        }
        if let Some((u, certified)) = smooth {
            // held over the whole interval when that verifies, otherwise
            // over the longest verified `ε = len / 2^k` and zero afterwards
            let mut eps = len;
            for k in 0..=self.cfg.max_halvings {
                let control = if k == 0 {
                    PiecewiseConstant::constant(u)
                } else {
                    PiecewiseConstant::new(vec![T::neg_infinity(), eps], vec![u, T::zero()]).map_err(|e| e.to_string())?
                };
                let trial = self.trial(x, &control, len)?;
                let d = Decision {
                    branch: Some(strict.branch),
                    control,
                    epsilon: (k > 0).then_some(eps),
                };
                if trial.end_v < v0 && trial.peak_v <= T::lit(2.0) * v0 {
                    offer(d, trial.end_v);
                    break;
                }
                if k == 0 && certified {
                    fallback = Some(d);
                }
                eps = eps / T::lit(2.0);
            }
        }
        for (cert, tol) in &bracket {
            match self.bracket_candidate(x, cert, tol, len, v0) {
                Ok(Some((d, end_v))) => offer(d, end_v),
                Ok(None) => {}
                Err(e) => failure = Some(e),
            }
        }
        if let Some((d, _)) = best {
            return Ok(d);
        }
        if let Some(d) = fallback {
            return Ok(d);
        }
        if let Some(e) = failure {
            return Err(e);
        }
        if strict.branch == Branch::Unclassified {
            return Err("state is unclassified".to_string());
        }
        Err(SynthesisError::NoDecrease {
            halvings: self.cfg.max_halvings,
        }
        .to_string())
    }

    fn trial(&self, x: &[T], control: &PiecewiseConstant<T>, len: T) -> Result<Trial<T>, String> {
        run_trial(&self.dynamics, x, control, len, self.cfg.probes, &self.cfg.integ).map_err(|e| e.to_string())
    }

    /// Shortest-search schedule for `cert`, then the same schedule with
    /// `|u1|` doubled while it stays verified, improves, and respects the
    /// policy cap.
    fn bracket_candidate(
        &self,
        x: &[T],
        cert: &Certificate,
        tol: &ToleranceMap,
        len: T,
        v0: T,
    ) -> Result<Option<(Decision<T>, T)>, String> {
        let policy = SearchPolicy {
            tol: *tol,
            ..self.cfg.policy.clone()
        };
        let pair = match synthesize_pair_with(&self.jets, x, cert, &policy) {
            Ok(p) => p,
            Err(SynthesisError::SearchExhausted { .. }) => return Ok(None),
            Err(e) => return Err(e.to_string()),
        };
        let ok = |t: &Trial<T>| t.end_v < v0 && t.peak_v <= T::lit(2.0) * v0;
        let try_pair = |pair: &BracketPair<T>, halvings: u32| -> Result<Option<(T, PiecewiseConstant<T>, T)>, String> {
            let mut eps = len;
            for _ in 0..=halvings {
                let control = build_schedule(pair, eps).map_err(|e| e.to_string())?.to_control(T::zero());
                let trial = self.trial(x, &control, len)?;
                if ok(&trial) {
                    return Ok(Some((eps, control, trial.end_v)));
                }
                eps = eps / T::lit(2.0);
            }
            Ok(None)
        };
        let Some((mut eps, mut control, mut end_v)) = try_pair(&pair, self.cfg.max_halvings)? else {
            return Ok(None);
        };
        let cap = T::lit(self.cfg.policy.u_max);
        let mut u1 = *pair.u1();
        while u1 != T::zero() && (u1 * T::lit(2.0)).abs() <= cap {
            u1 = u1 * T::lit(2.0);
            let bigger = BracketPair::new(*pair.rho(), u1).map_err(|e| e.to_string())?;
            match try_pair(&bigger, ESCALATION_HALVINGS)? {
                Some((e, c, v)) if v < end_v => {
                    eps = e;
                    control = c;
                    end_v = v;
                }
                _ => break,
            }
        }
        Ok(Some((
            Decision {
                branch: Some(cert.branch),
                control,
                epsilon: Some(eps),
            },
            end_v,
        )))
    }

    pub fn run(&self, partition: &Partition<T>, x0: &[T]) -> Result<(Trajectory<T>, RunReport), SimError> {
        let n = self.sys.dim();
        if x0.len() != n {
            return Err(SimError::Dimension {
                expected: n,
                found: x0.len(),
            });
        }
        let mut traj = Trajectory::default();
        let mut x = x0.to_vec();
        let times = partition.times();
        for w in times.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let len = t1 - t0;
            let decision = self.decide(&x, len).map_err(|reason| SimError::ControllerFailure {
                t: t0.approx_f64(),
                x: x.iter().map(|c| c.approx_f64()).collect(),
                reason,
            })?;
            let local = probe_times(len, self.cfg.probes, decision.control.breakpoints());
            let states = self
                .dynamics
                .flow(&x, T::zero(), &decision.control, &local, &self.cfg.integ)
                .map_err(|source| SimError::Numerical {
                    t: t0.approx_f64(),
                    source,
                })?;
            traj.samples.push(Sample {
                t: t0,
                x: x.clone(),
                u: decision.control.value_at(T::zero()),
            });
            let last = local.len() - 1;
            for (s, st) in local.iter().zip(&states).take(last).skip(1) {
                traj.dense.push(Sample {
                    t: t0 + *s,
                    x: st.clone(),
                    u: decision.control.value_at(*s),
                });
            }
            x = states[last].clone();
        }
        traj.samples.push(Sample {
            t: *times.last().unwrap(),
            x,
            u: T::zero(),
        });
        let report = verify_report(&traj, &self.sys, None)?;
        Ok((traj, report))
    }

    /// Runs from each initial state; runs are independent and execute in
    /// parallel.
    pub fn sweep(
        &self,
        partition: &Partition<T>,
        x0s: &[Vec<T>],
    ) -> Vec<Result<(Trajectory<T>, RunReport), SimError>> {
        x0s.par_iter().map(|x0| self.run(partition, x0)).collect()
    }
}

pub fn run_closed_loop<T: Real>(
    sys: &AffineSystem<T>,
    theta: &PolyScalar<T>,
    partition: &Partition<T>,
    x0: &[T],
    cfg: &ClosedLoopConfig<T>,
) -> Result<(Trajectory<T>, RunReport), SimError> {
    Controller::new(sys, theta, cfg.clone())?.run(partition, x0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// `V(π(T_i))` for every sample time.
    pub v_samples: Vec<f64>,
    pub intervals: usize,
    /// Intervals with `V(T_{i+1}) < V(T_i)` or starting at the origin.
    pub decrease_count: usize,
    pub decrease_ok: bool,
    pub first_decrease_violation: Option<usize>,
    pub intersample_ok: bool,
    pub first_intersample_violation: Option<usize>,
    /// Largest `max_s V(π(s)) / V(π(T_i))` over intervals with `V(T_i) > 0`.
    pub max_intersample_ratio: f64,
    pub sup_control: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
}

impl RunReport {
    pub fn to_record(&self) -> Record {
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |i| i.to_string());
        let mut r = Record::new();
        r.push("intervals", self.intervals)
            .push("decrease_ok", self.decrease_ok)
            .push("decrease_count", self.decrease_count)
            .push("first_decrease_violation", opt(self.first_decrease_violation))
            .push("intersample_ok", self.intersample_ok)
            .push("first_intersample_violation", opt(self.first_intersample_violation))
            .push_f64("max_intersample_ratio", self.max_intersample_ratio)
            .push_f64("sup_control", self.sup_control)
            .push_f64("initial_norm", self.initial_norm)
            .push_f64("final_norm", self.final_norm);
        r
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "decrease: {} ({}/{} intervals)",
            if self.decrease_ok { "OK" } else { "FAILED" },
            self.decrease_count,
            self.intervals
        );
        if let Some(i) = self.first_decrease_violation {
            let _ = write!(s, ", first violation at interval {i}");
        }
        let _ = write!(
            s,
            "\nintersample: {} (max V ratio {:.4})",
            if self.intersample_ok { "OK" } else { "FAILED" },
            self.max_intersample_ratio
        );
        if let Some(i) = self.first_intersample_violation {
            let _ = write!(s, ", first violation at interval {i}");
        }
        let _ = write!(
            s,
            "\nsup_control: {}\nfinal_norm: {} (initial {})\n",
            format_f64(self.sup_control),
            format_f64(self.final_norm),
            format_f64(self.initial_norm)
        );
        s
    }
}

fn norm<T: Real>(x: &[T]) -> f64 {
    x.iter().map(|c| c.approx_f64().powi(2)).sum::<f64>().sqrt()
}

/// Recomputes the decrease, inter-sample and control-bound properties from
/// a trajectory. With a region, `sup_control` only counts intervals whose
/// starting state lies in it.
pub fn verify_report<T: Real>(
    traj: &Trajectory<T>,
    sys: &AffineSystem<T>,
    region: Option<&Region>,
) -> Result<RunReport, SimError> {
    if traj.samples.is_empty() {
        return Err(SimError::EmptyTrajectory);
    }
    let dynamics = Dynamics::new(sys);
    let v_at = |x: &[T]| dynamics.lyapunov(x).approx_f64();
    let v_samples: Vec<f64> = traj.samples.iter().map(|s| v_at(&s.x)).collect();
    let intervals = traj.samples.len() - 1;
    let mut report = RunReport {
        v_samples: v_samples.clone(),
        intervals,
        decrease_count: 0,
        decrease_ok: true,
        first_decrease_violation: None,
        intersample_ok: true,
        first_intersample_violation: None,
        max_intersample_ratio: 0.0,
        sup_control: 0.0,
        initial_norm: norm(&traj.samples[0].x),
        final_norm: norm(&traj.samples.last().unwrap().x),
    };
    let mut d = 0;
    for i in 0..intervals {
        let start = &traj.samples[i];
        let (t0, t1) = (start.t, traj.samples[i + 1].t);
        let v0 = v_samples[i];
        let at_origin = start.x.iter().all(|c| *c == T::zero());
        let counted = region.is_none_or(|r| r.contains(&start.x.iter().map(|c| c.approx_f64()).collect::<Vec<_>>()));
        if counted {
            report.sup_control = report.sup_control.max(start.u.approx_f64().abs());
        }
        let mut peak = v_samples[i + 1];
        while d < traj.dense.len() && traj.dense[d].t < t1 {
            let s = &traj.dense[d];
            if s.t > t0 {
                peak = peak.max(v_at(&s.x));
                if counted {
                    report.sup_control = report.sup_control.max(s.u.approx_f64().abs());
                }
            }
            d += 1;
        }
        if at_origin || v_samples[i + 1] < v0 {
            report.decrease_count += 1;
        } else if report.decrease_ok {
            report.decrease_ok = false;
            report.first_decrease_violation = Some(i);
        }
        if v0 > 0.0 {
            report.max_intersample_ratio = report.max_intersample_ratio.max(peak / v0);
        }
        if peak > 2.0 * v0 && report.intersample_ok {
            report.intersample_ok = false;
            report.first_intersample_violation = Some(i);
        }
    }
    Ok(report)
}

/// CSV with header `t,x1..xn,u,V`; samples and probes interleaved in time
/// order.
pub fn trajectory_csv<T: Real>(traj: &Trajectory<T>, sys: &AffineSystem<T>) -> String {
    let dynamics = Dynamics::new(sys);
    let n = sys.dim();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",u,V\n");
    let mut rows: Vec<&Sample<T>> = traj.samples.iter().chain(&traj.dense).collect();
    rows.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    for s in rows {
        out.push_str(&format_f64(s.t.approx_f64()));
        for c in &s.x {
            out.push(',');
            out.push_str(&format_f64(c.approx_f64()));
        }
        let _ = writeln!(
            out,
            ",{},{}",
            format_f64(s.u.approx_f64()),
            format_f64(dynamics.lyapunov(&s.x).approx_f64())
        );
    }
    out
}

/// Reads a trajectory CSV back. Rows whose time lies on the grid
/// `k * dt` (or the final row) become samples, the rest probes; without
/// `dt` every row is a sample.
pub fn parse_trajectory_csv(text: &str, dim: usize, dt: Option<f64>) -> Result<Trajectory<f64>, SimError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(SimError::EmptyTrajectory)?;
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dim).map(|i| format!("x{i}")))
        .chain(["u".to_string(), "V".to_string()])
        .collect();
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != expected {
        return Err(SimError::Csv {
            line: hline + 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let vals: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| SimError::Csv {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if vals.len() != dim + 3 {
            return Err(SimError::Csv {
                line: idx + 1,
                message: format!("expected {} columns, found {}", dim + 3, vals.len()),
            });
        }
        rows.push(Sample {
            t: vals[0],
            x: vals[1..=dim].to_vec(),
            u: vals[dim + 1],
        });
    }
    if rows.is_empty() {
        return Err(SimError::EmptyTrajectory);
    }
    let last = rows.len() - 1;
    let mut traj = Trajectory::default();
    for (i, r) in rows.into_iter().enumerate() {
        let on_grid = match dt {
            None => true,
            Some(dt) => {
                let k = (r.t / dt).round();
                (r.t - k * dt).abs() <= 1e-9 * dt.max(r.t.abs()) || i == last
            }
        };
        if on_grid {
            traj.samples.push(r);
        } else {
            traj.dense.push(r);
        }
    }
    Ok(traj)
}

/// Bound `max (ξ(|ω|) + |gV(ω)|)` over a grid on `region`, which dominates
/// `|u|` for the smooth law whenever `|fV + θ| <= ξ(|ω|) |gV|`.
pub fn smooth_control_bound(
    sys: &AffineSystem<f64>,
    xi: &PolyScalar<f64>,
    region: &Region,
    grid: usize,
) -> Result<f64, CertificateError> {
    let gv = sys.g().apply_to_scalar(sys.v())?;
    let mut c: f64 = 0.0;
    for w in region.grid_points(grid)? {
        let s = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        c = c.max(xi.eval(&[s])? + gv.eval(&w)?.abs());
    }
    Ok(c)
}
