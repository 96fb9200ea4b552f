#![allow(dead_code)]

pub mod brute;

use proptest::prelude::*;
use rand::Rng;
use sdfstab::field_algebra::{PolyField, PolyScalar};
use sdfstab::system::AffineSystem;
use sdfstab::{Field, Poly};

/// Terms with small integer coefficients, so the same polynomial is exact
/// in every scalar type.
pub fn random_poly(rng: &mut impl Rng, dim: usize, max_deg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero(dim);
    for _ in 0..terms {
        let mut exps = vec![0u32; dim];
        let deg = rng.gen_range(0..=max_deg);
        for _ in 0..deg {
            exps[rng.gen_range(0..dim)] += 1;
        }
        let c = rng.gen_range(-3i32..=3) as f64;
        p = &p + &PolyScalar::monomial(exps, c);
    }
    p
}

pub fn random_field(rng: &mut impl Rng, dim: usize, max_deg: u32) -> Field {
    PolyField::new((0..dim).map(|_| random_poly(rng, dim, max_deg, 3)).collect()).unwrap()
}

pub fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// A random system that satisfies the structural checks: drift without
/// constant terms and `V = |x|^2 + (random terms of degree 3..4)`.
pub fn random_system(rng: &mut impl Rng, dim: usize) -> AffineSystem<f64> {
    let strip = |p: Poly| Poly::from_terms(dim, p.terms().filter(|(m, _)| m.degree() > 0).map(|(m, c)| (m.clone(), *c)));
    let f = PolyField::new((0..dim).map(|_| strip(random_poly(rng, dim, 3, 3))).collect()).unwrap();
    let g = random_field(rng, dim, 2);
    let mut v = Poly::zero(dim);
    for i in 0..dim {
        let mut e = vec![0u32; dim];
        e[i] = 2;
        v = &v + &PolyScalar::monomial(e, 1.0);
    }
    let extra = random_poly(rng, dim, 4, 2);
    let extra = Poly::from_terms(dim, extra.terms().filter(|(m, _)| m.degree() >= 3).map(|(m, c)| (m.clone(), *c / 8.0)));
    AffineSystem::new(f, g, &v + &extra).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn poly_strategy(dim: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::collection::vec(0u32..3, dim), -3i32..=3), 1..4).prop_map(move |terms| {
        terms
            .into_iter()
            .fold(Poly::zero(dim), |acc, (e, c)| &acc + &PolyScalar::monomial(e, c as f64))
    })
}

pub fn field_strategy(dim: usize) -> impl Strategy<Value = Field> {
    prop::collection::vec(poly_strategy(dim), dim).prop_map(|c| PolyField::new(c).unwrap())
}

pub fn point_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, dim)
}
