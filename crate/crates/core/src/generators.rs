//! Bracket generators `λ_{κ,j}` over the drift `f` and input field `g`.
//!
//! `λ_{1,0} = f`; for `κ >= 2`, `1 <= j <= κ-1`, `λ_{κ,j}` is the sum over
//! compositions `r_1 + ... + r_j = κ - j - 1` (nonnegative parts) of the
//! nested bracket that starts from `[f, g]`, brackets with `f` `r_j` times,
//! then with `g`, then `r_{j-1}` times with `f`, and so on, ending with `r_1`
//! brackets with `f`. Each summand has `κ` leaves, `j` of them `g`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::field_algebra::{lie_bracket, FieldError, PolyField};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("invalid generator index (kappa={kappa}, j={j})")]
    InvalidId { kappa: u32, j: u32 },
    #[error("tuple budget needs a positive total order")]
    EmptyBudget,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Formal bracket tree over the two symbols `F` and `G`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum BracketWord {
    F,
    G,
    Bracket(Box<BracketWord>, Box<BracketWord>),
}

impl BracketWord {
    pub fn bracket(left: BracketWord, right: BracketWord) -> Self {
        BracketWord::Bracket(Box::new(left), Box::new(right))
    }

    /// Number of leaves.
    pub fn order(&self) -> u32 {
        match self {
            BracketWord::F | BracketWord::G => 1,
            BracketWord::Bracket(l, r) => l.order() + r.order(),
        }
    }

    /// Number of `G` leaves.
    pub fn order_g(&self) -> u32 {
        match self {
            BracketWord::F => 0,
            BracketWord::G => 1,
            BracketWord::Bracket(l, r) => l.order_g() + r.order_g(),
        }
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::F => write!(f, "F"),
            BracketWord::G => write!(f, "G"),
            BracketWord::Bracket(l, r) => write!(f, "[{l},{r}]"),
        }
    }
}

/// Index pair `(κ, j)` of a generator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GeneratorId {
    kappa: u32,
    j: u32,
}

impl GeneratorId {
    pub fn new(kappa: u32, j: u32) -> Result<Self, GeneratorError> {
        let valid = (kappa == 1 && j == 0) || (kappa >= 2 && j >= 1 && j < kappa);
        if valid {
            Ok(GeneratorId { kappa, j })
        } else {
            Err(GeneratorError::InvalidId { kappa, j })
        }
    }

    pub fn drift() -> Self {
        GeneratorId { kappa: 1, j: 0 }
    }

    /// `order λ_{κ,j} = κ`.
    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// `order_g λ_{κ,j} = j`.
    pub fn j(&self) -> u32 {
        self.j
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lambda_{}_{}", self.kappa, self.j)
    }
}

/// Compositions of `total` into `parts` nonnegative parts, listed as
/// `(r_parts, ..., r_1)` in descending lexicographic order.
fn compositions(total: u32, parts: u32) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The summand words of `λ_{κ,j}`, one per composition.
pub fn lambda_word_set(id: GeneratorId) -> Vec<BracketWord> {
    use BracketWord::{F, G};
    if id.kappa == 1 {
        return vec![F];
    }
    let j = id.j;
    // each composition is (r_j, r_{j-1}, ..., r_1)
    compositions(id.kappa - j - 1, j)
        .into_iter()
        .map(|rs| {
            let mut w = BracketWord::bracket(F, G);
            for (pos, &r) in rs.iter().enumerate() {
                if pos > 0 {
                    w = BracketWord::bracket(w, G);
                }
                for _ in 0..r {
                    w = BracketWord::bracket(w, F);
                }
            }
            w
        })
        .collect()
}

/// A generator instantiated on concrete `f`, `g`.
#[derive(Clone, Debug)]
pub struct GeneratorSum<T> {
    pub id: GeneratorId,
    pub words: Vec<BracketWord>,
    pub field: PolyField<T>,
}

/// Memoized generator and bracket-word fields for one `(f, g)` pair.
///
/// Safe for concurrent readers; an entry computed twice by racing writers
/// is identical, so the second insert is discarded.
pub struct Generators<T> {
    f: PolyField<T>,
    g: PolyField<T>,
    words: RwLock<HashMap<BracketWord, Arc<PolyField<T>>>>,
    sums: RwLock<HashMap<GeneratorId, Arc<GeneratorSum<T>>>>,
}

impl<T: Scalar> Generators<T> {
    pub fn new(f: PolyField<T>, g: PolyField<T>) -> Result<Self, GeneratorError> {
        if f.dim() != g.dim() {
            return Err(FieldError::DimensionMismatch {
                expected: f.dim(),
                found: g.dim(),
            }
            .into());
        }
        Ok(Generators {
            f,
            g,
            words: RwLock::new(HashMap::new()),
            sums: RwLock::new(HashMap::new()),
        })
    }

    pub fn f(&self) -> &PolyField<T> {
        &self.f
    }

    pub fn g(&self) -> &PolyField<T> {
        &self.g
    }

    /// The vector field denoted by a bracket word.
    pub fn word_field(&self, word: &BracketWord) -> Result<Arc<PolyField<T>>, GeneratorError> {
        match word {
            BracketWord::F => return Ok(Arc::new(self.f.clone())),
            BracketWord::G => return Ok(Arc::new(self.g.clone())),
            BracketWord::Bracket(..) => {}
        }
        if let Some(hit) = self.words.read().unwrap().get(word) {
            return Ok(hit.clone());
        }
        let BracketWord::Bracket(l, r) = word else { unreachable!() };
        let field = Arc::new(lie_bracket(&*self.word_field(l)?, &*self.word_field(r)?)?);
        let mut cache = self.words.write().unwrap();
        Ok(cache.entry(word.clone()).or_insert(field).clone())
    }

    pub fn get(&self, id: GeneratorId) -> Result<Arc<GeneratorSum<T>>, GeneratorError> {
        if let Some(hit) = self.sums.read().unwrap().get(&id) {
            return Ok(hit.clone());
        }
        let words = lambda_word_set(id);
        let mut field = PolyField::zero(self.f.dim());
        for w in &words {
            field = field.try_add(&*self.word_field(w)?)?;
        }
        let sum = Arc::new(GeneratorSum { id, words, field });
        let mut cache = self.sums.write().unwrap();
        Ok(cache.entry(id).or_insert(sum).clone())
    }

    pub fn basis_up_to(&self, max_order: u32) -> Result<Vec<Arc<GeneratorSum<T>>>, GeneratorError> {
        ids_up_to(max_order).into_iter().map(|id| self.get(id)).collect()
    }

    pub fn enumerate_tuples(
        &self,
        budget: TupleBudget,
    ) -> Result<Vec<Vec<Arc<GeneratorSum<T>>>>, GeneratorError> {
        enumerate_tuple_ids(budget)?
            .into_iter()
            .map(|t| t.into_iter().map(|id| self.get(id)).collect())
            .collect()
    }
}

pub fn instantiate_generator<T: Scalar>(
    id: GeneratorId,
    f: &PolyField<T>,
    g: &PolyField<T>,
) -> Result<GeneratorSum<T>, GeneratorError> {
    let gens = Generators::new(f.clone(), g.clone())?;
    Ok((*gens.get(id)?).clone())
}

pub fn basis_up_to<T: Scalar>(
    max_order: u32,
    f: &PolyField<T>,
    g: &PolyField<T>,
) -> Result<Vec<GeneratorSum<T>>, GeneratorError> {
    let gens = Generators::new(f.clone(), g.clone())?;
    Ok(gens
        .basis_up_to(max_order)?
        .into_iter()
        .map(|s| (*s).clone())
        .collect())
}

/// All valid ids with `κ <= max_order`, ordered by `(κ, j)`.
pub fn ids_up_to(max_order: u32) -> Vec<GeneratorId> {
    let mut ids = Vec::new();
    for kappa in 1..=max_order {
        if kappa == 1 {
            ids.push(GeneratorId::drift());
        } else {
            ids.extend((1..kappa).map(|j| GeneratorId { kappa, j }));
        }
    }
    ids
}

/// Order constraints on a tuple `(Δ_1, ..., Δ_k)` of generators.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum TupleBudget {
    /// `Σ order Δ_p <= max`.
    OrderAtMost(u32),
    /// `Σ order Δ_p = order` and `Σ order_g Δ_p = g_order`.
    OrderAndGOrder { order: u32, g_order: u32 },
    /// `Σ order Δ_p = order` and `Σ order_g Δ_p <= g_max`.
    OrderAndGOrderAtMost { order: u32, g_max: u32 },
}

impl TupleBudget {
    fn max_total(&self) -> u32 {
        match *self {
            TupleBudget::OrderAtMost(n) => n,
            TupleBudget::OrderAndGOrder { order, .. } | TupleBudget::OrderAndGOrderAtMost { order, .. } => order,
        }
    }

    pub fn admits(&self, total_order: u32, total_g: u32) -> bool {
        match *self {
            TupleBudget::OrderAtMost(n) => total_order <= n,
            TupleBudget::OrderAndGOrder { order, g_order } => total_order == order && total_g == g_order,
            TupleBudget::OrderAndGOrderAtMost { order, g_max } => total_order == order && total_g <= g_max,
        }
    }
}

/// Every nonempty ordered tuple of generator ids meeting the budget,
/// sorted by length and then lexicographically.
///
/// Each generator has order at least one, so the budget bounds the tuple
/// length.
pub fn enumerate_tuple_ids(budget: TupleBudget) -> Result<Vec<Vec<GeneratorId>>, GeneratorError> {
    let max_total = budget.max_total();
    if max_total == 0 {
        return Err(GeneratorError::EmptyBudget);
    }
    let ids = ids_up_to(max_total);
    let mut out = Vec::new();
    let mut stack = Vec::new();
    extend_tuples(&ids, max_total, 0, &mut stack, &mut |t: &[GeneratorId]| {
        let order = t.iter().map(|id| id.kappa).sum();
        let g = t.iter().map(|id| id.j).sum();
        if budget.admits(order, g) {
            out.push(t.to_vec());
        }
    });
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

fn extend_tuples(
    ids: &[GeneratorId],
    max_total: u32,
    used: u32,
    stack: &mut Vec<GeneratorId>,
    visit: &mut impl FnMut(&[GeneratorId]),
) {
    for id in ids {
        if used + id.kappa > max_total {
            continue;
        }
        stack.push(*id);
        visit(stack);
        extend_tuples(ids, max_total, used + id.kappa, stack, visit);
        stack.pop();
    }
}
