use std::collections::HashMap;

use sdfstab::certificate::Branch;
use sdfstab::generators::{ids_up_to, GeneratorId, Generators};
use sdfstab::{Poly, System};

const TOL: f64 = 1e-9;

/// Enumerates every condition up to the first failing vanishing budget and
/// only then applies the branch priority.
pub struct BruteForce<'a> {
    sys: &'a System,
    gens: Generators<f64>,
    memo: HashMap<Vec<GeneratorId>, Poly>,
}

#[derive(Debug, Default)]
struct Conditions {
    vanish: bool,
    top: f64,
    top_mag: f64,
    p2i: Vec<u32>,
    p2ii: Vec<u32>,
    p2iii: bool,
}

fn zero(v: f64, m: f64) -> bool {
    v.abs() <= TOL * m.max(1.0)
}

fn neg(v: f64, m: f64) -> bool {
    v < -TOL * m.max(1.0)
}

impl<'a> BruteForce<'a> {
    pub fn new(sys: &'a System) -> Self {
        BruteForce {
            sys,
            gens: Generators::new(sys.f().clone(), sys.g().clone()).unwrap(),
            memo: HashMap::new(),
        }
    }

    fn poly(&mut self, t: &[GeneratorId]) -> Poly {
        if t.is_empty() {
            return self.sys.v().clone();
        }
        if let Some(p) = self.memo.get(t) {
            return p.clone();
        }
        let inner = self.poly(&t[1..]);
        let p = self.gens.get(t[0]).unwrap().field.apply_to_scalar(&inner).unwrap();
        self.memo.insert(t.to_vec(), p.clone());
        p
    }

    fn eval(&mut self, t: &[GeneratorId], x: &[f64]) -> (f64, f64) {
        self.poly(t).eval_with_magnitude(x).unwrap()
    }

    /// All id sequences of total order at most `max` (exactly `max` when
    /// `exact`) whose g-order passes `g_ok`.
    fn tuples(max: u32, exact: bool, g_ok: &dyn Fn(u32) -> bool) -> Vec<Vec<GeneratorId>> {
        let ids = ids_up_to(max);
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<GeneratorId>, u32, u32)> = vec![(vec![], 0, 0)];
        while let Some((t, k, j)) = stack.pop() {
            if !t.is_empty() && (!exact || k == max) && g_ok(j) {
                out.push(t.clone());
            }
            for id in &ids {
                if k + id.kappa() <= max {
                    let mut u = t.clone();
                    u.push(*id);
                    stack.push((u, k + id.kappa(), j + id.j()));
                }
            }
        }
        out
    }

    fn all_vanish(&mut self, ts: &[Vec<GeneratorId>], x: &[f64]) -> bool {
        let mut ok = true;
        for t in ts {
            let (v, m) = self.eval(t, x);
            ok &= zero(v, m);
        }
        ok
    }

    fn lambda_nonzero(&mut self, n: u32, j: u32, x: &[f64]) -> bool {
        let (v, m) = self.eval(&[GeneratorId::new(n + 1, j).unwrap()], x);
        !zero(v, m)
    }

    fn conditions(&mut self, x: &[f64], n: u32) -> Conditions {
        let van = Self::tuples(n, false, &|_| true);
        let vanish = self.all_vanish(&van, x);
        let (top, top_mag) = self.eval(&vec![GeneratorId::drift(); n as usize + 1], x);
        let mut p2i = Vec::new();
        for j in (1..=n).step_by(2) {
            let side = (2..j).step_by(2).all(|q| {
                let ts = Self::tuples(n + 1, true, &|g| g == q);
                self.all_vanish(&ts, x)
            });
            if self.lambda_nonzero(n, j, x) && side {
                p2i.push(j);
            }
        }
        let mut p2ii = Vec::new();
        if n % 2 == 1 && n > 2 {
            for j in (1..=n - 2).step_by(2) {
                let side = (j + 1..n).filter(|q| q % 2 == 0).all(|q| {
                    let ts = Self::tuples(n + 1, true, &|g| g == q);
                    self.all_vanish(&ts, x)
                });
                if self.lambda_nonzero(n, j, x) && side {
                    p2ii.push(j);
                }
            }
        }
        let p2iii = n % 2 == 0 && {
            let (v, m) = self.eval(&[GeneratorId::new(n + 1, n).unwrap()], x);
            neg(v, m)
        };
        Conditions {
            vanish,
            top,
            top_mag,
            p2i,
            p2ii,
            p2iii,
        }
    }

    pub fn classify(&mut self, x: &[f64], n_max: u32) -> (Branch, Option<u32>, Option<u32>) {
        let gv = self.sys.g().apply_to_scalar(self.sys.v()).unwrap().eval_with_magnitude(x).unwrap();
        let fv = self.eval(&[GeneratorId::drift()], x);
        let mut table = Vec::new();
        for n in 1..=n_max {
            let c = self.conditions(x, n);
            let stop = !c.vanish;
            table.push((n, c));
            if stop {
                break;
            }
        }
        if !zero(gv.0, gv.1) {
            return (Branch::GvNonzero, None, None);
        }
        if neg(fv.0, fv.1) {
            return (Branch::DriftNegative, None, None);
        }
        for (n, c) in &table {
            if !c.vanish {
                break;
            }
            if neg(c.top, c.top_mag) {
                return (Branch::P1, Some(*n), None);
            }
            if !zero(c.top, c.top_mag) {
                continue;
            }
            if let Some(j) = c.p2i.first() {
                return (Branch::P2i, Some(*n), Some(*j));
            }
            if let Some(j) = c.p2ii.first() {
                return (Branch::P2ii, Some(*n), Some(*j));
            }
            if c.p2iii {
                return (Branch::P2iii, Some(*n), None);
            }
        }
        (Branch::Unclassified, None, None)
    }
}
