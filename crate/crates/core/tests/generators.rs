use std::collections::BTreeSet;

use sdfstab::bench::registry;
use sdfstab::field_algebra::PolyField;
use sdfstab::generators::{
    enumerate_tuple_ids, ids_up_to, lambda_word_set, BracketWord, GeneratorId, Generators, TupleBudget,
};
use sdfstab::Poly;

fn words(kappa: u32, j: u32) -> BTreeSet<String> {
    lambda_word_set(GeneratorId::new(kappa, j).unwrap())
        .iter()
        .map(ToString::to_string)
        .collect()
}

fn set(ws: &[&str]) -> BTreeSet<String> {
    ws.iter().map(|s| s.to_string()).collect()
}

#[test]
fn listed_generators() {
    assert_eq!(words(2, 1), set(&["[F,G]"]));
    assert_eq!(words(3, 1), set(&["[[F,G],F]"]));
    assert_eq!(words(3, 2), set(&["[[F,G],G]"]));
    assert_eq!(words(4, 1), set(&["[[[F,G],F],F]"]));
    assert_eq!(words(4, 2), set(&["[[[F,G],F],G]", "[[[F,G],G],F]"]));
    assert_eq!(words(4, 3), set(&["[[[F,G],G],G]"]));
    assert_eq!(words(5, 1), set(&["[[[[F,G],F],F],F]"]));
    assert_eq!(
        words(5, 2),
        set(&["[[[[F,G],F],F],G]", "[[[[F,G],F],G],F]", "[[[[F,G],G],F],F]"])
    );
}

#[test]
fn definition_governs_order_five() {
    assert_eq!(
        words(5, 3),
        set(&["[[[[F,G],F],G],G]", "[[[[F,G],G],F],G]", "[[[[F,G],G],G],F]"])
    );
    assert_eq!(words(5, 4), set(&["[[[[F,G],G],G],G]"]));
}

#[test]
fn drift_is_order_one() {
    assert_eq!(lambda_word_set(GeneratorId::drift()), vec![BracketWord::F]);
    assert!(GeneratorId::new(3, 3).is_err());
    assert!(GeneratorId::new(0, 0).is_err());
    assert!(GeneratorId::new(2, 0).is_err());
}

fn binomial(n: u32, k: u32) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) as usize / (i + 1) as usize)
}

#[test]
fn summand_count_and_orders() {
    for kappa in 2..=6 {
        for j in 1..kappa {
            let ws = lambda_word_set(GeneratorId::new(kappa, j).unwrap());
            assert_eq!(ws.len(), binomial(kappa - 2, j - 1), "({kappa},{j})");
            let distinct: BTreeSet<_> = ws.iter().map(ToString::to_string).collect();
            assert_eq!(distinct.len(), ws.len());
            for w in &ws {
                assert_eq!((w.order(), w.order_g()), (kappa, j), "{w}");
            }
        }
    }
}

#[test]
fn id_listing() {
    let ids = ids_up_to(3);
    let pairs: Vec<(u32, u32)> = ids.iter().map(|i| (i.kappa(), i.j())).collect();
    assert_eq!(pairs, vec![(1, 0), (2, 1), (3, 1), (3, 2)]);
}

#[test]
fn tuple_budgets() {
    let all = enumerate_tuple_ids(TupleBudget::OrderAtMost(3)).unwrap();
    // order-3 tuples: single generators of order <= 3, pairs summing to <= 3,
    // and the triple (f, f, f)
    for t in &all {
        assert!(t.iter().map(|i| i.kappa()).sum::<u32>() <= 3);
    }
    let f = GeneratorId::drift();
    let l21 = GeneratorId::new(2, 1).unwrap();
    assert!(all.contains(&vec![f, f, f]));
    assert!(all.contains(&vec![f, l21]));
    assert!(all.contains(&vec![l21, f]));
    let distinct: BTreeSet<_> = all.iter().cloned().collect();
    assert_eq!(distinct.len(), all.len());
    let exact = enumerate_tuple_ids(TupleBudget::OrderAndGOrder { order: 3, g_order: 1 }).unwrap();
    for t in &exact {
        assert_eq!(t.iter().map(|i| i.kappa()).sum::<u32>(), 3);
        assert_eq!(t.iter().map(|i| i.j()).sum::<u32>(), 1);
    }
    assert!(enumerate_tuple_ids(TupleBudget::OrderAtMost(0)).is_err());
}

#[test]
fn generator_fields_on_case3() {
    // f = (-x y^2, 0), g = e2: [X, g] = -dX/dy for X with zero second
    // component, so [f,g] = (2xy, 0) and [[f,g],g] = (-2x, 0)
    let sys = registry("case3").unwrap().system;
    let gens = Generators::new(sys.f().clone(), sys.g().clone()).unwrap();
    let l21 = gens.get(GeneratorId::new(2, 1).unwrap()).unwrap();
    let want21 = PolyField::new(vec![Poly::monomial(vec![1, 1], 2.0), Poly::zero(2)]).unwrap();
    assert_eq!(l21.field, want21);
    let l32 = gens.get(GeneratorId::new(3, 2).unwrap()).unwrap();
    let want32 = PolyField::new(vec![Poly::monomial(vec![1, 0], -2.0), Poly::zero(2)]).unwrap();
    assert_eq!(l32.field, want32);
    assert!(gens.get(GeneratorId::new(4, 3).unwrap()).unwrap().field.is_zero());
}
