//! Seeded random generators for formulas, traces and lassos. Everything
//! is driven by an explicit seed, so generation is reproducible
//! byte-for-byte; the acceptance and property suites are built on these.
//!
//! Formula generation respects the requested fragment's grammar, keeps
//! every fixed-point variable modally guarded (a recursion variable is
//! only emitted under at least one modality of its binder), binds data
//! variables before use, and never reuses a binder name.

use datamon_core::ast::{BExpr, DataTerm, DataValue, DataVar, Formula, RecVar};
use datamon_core::fragments::Fragment;
use datamon_core::trace::{FiniteTrace, LassoTrace};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Tt,
    Ff,
    Diamond,
    Box,
    Exists,
    Forall,
    Or,
    And,
    Min,
    Max,
    Var,
}

fn allowed(fragment: Fragment) -> &'static [Node] {
    use Node::*;
    match fragment {
        Fragment::Hmld => &[Tt, Ff, Diamond, Box, Exists, Forall, Or, And],
        Fragment::CHmld => &[Tt, Diamond, Exists, Or, And, Min, Var],
        Fragment::DisjHmld => &[Tt, Diamond, Exists, Or, Min, Var],
        Fragment::SHmld => &[Ff, Box, Forall, Or, And, Max, Var],
        Fragment::ConjHmld => &[Ff, Box, Forall, And, Max, Var],
        Fragment::MinHmld => &[Tt, Ff, Diamond, Box, Exists, Forall, Or, And, Min, Var],
        Fragment::RecHmld => &[Tt, Ff, Diamond, Box, Exists, Forall, Or, And, Min, Max, Var],
    }
}

fn leaf(fragment: Fragment) -> Node {
    match fragment {
        Fragment::SHmld | Fragment::ConjHmld => Node::Ff,
        _ => Node::Tt,
    }
}

struct Gen {
    rng: ChaCha8Rng,
    max_vars: usize,
    next_data: usize,
    next_rec: usize,
    fragment: Fragment,
}

struct Scope {
    data: Vec<DataVar>,
    /// recursion variables in scope, with the modal depth at their binder
    rec: Vec<(RecVar, usize)>,
    modal_depth: usize,
}

impl Gen {
    fn bexpr(&mut self, scope: &Scope) -> BExpr {
        let star = DataTerm::Star;
        let mut atoms: Vec<BExpr> = vec![BExpr::True];
        for v in &scope.data {
            atoms.push(BExpr::Eq(star.clone(), DataTerm::Var(v.clone())));
            atoms.push(BExpr::neq(star.clone(), DataTerm::Var(v.clone())));
        }
        if scope.data.len() >= 2 {
            let a = scope.data.choose(&mut self.rng).unwrap().clone();
            let b = scope.data.choose(&mut self.rng).unwrap().clone();
            atoms.push(BExpr::Eq(DataTerm::Var(a), DataTerm::Var(b)));
        }
        let first = atoms.choose(&mut self.rng).unwrap().clone();
        if self.rng.gen_bool(0.25) && atoms.len() > 1 {
            let second = atoms.choose(&mut self.rng).unwrap().clone();
            BExpr::and(first, second)
        } else {
            first
        }
    }

    fn formula(&mut self, depth: usize, scope: &mut Scope) -> Formula {
        let usable_rec: Vec<RecVar> = scope
            .rec
            .iter()
            .filter(|(_, bound_depth)| scope.modal_depth > *bound_depth)
            .map(|(x, _)| x.clone())
            .collect();
        let node = if depth == 0 {
            // at the frontier, close with a leaf or a guarded recursion hook
            if !usable_rec.is_empty() && self.rng.gen_bool(0.5) {
                Node::Var
            } else {
                leaf(self.fragment)
            }
        } else {
            let options: Vec<Node> = allowed(self.fragment)
                .iter()
                .copied()
                .filter(|n| match n {
                    Node::Var => !usable_rec.is_empty(),
                    Node::Exists | Node::Forall => self.next_data < self.max_vars,
                    _ => true,
                })
                .collect();
            *options.choose(&mut self.rng).unwrap()
        };
        match node {
            Node::Tt => Formula::Tt,
            Node::Ff => Formula::Ff,
            Node::Var => Formula::Var(usable_rec.choose(&mut self.rng).unwrap().clone()),
            Node::Diamond | Node::Box => {
                let b = self.bexpr(scope);
                scope.modal_depth += 1;
                let body = self.formula(depth - 1, scope);
                scope.modal_depth -= 1;
                if node == Node::Diamond {
                    Formula::diamond(b, body)
                } else {
                    Formula::box_mod(b, body)
                }
            }
            Node::Exists | Node::Forall => {
                let v = DataVar::new(&format!("x{}", self.next_data));
                self.next_data += 1;
                scope.data.push(v.clone());
                let body = self.formula(depth - 1, scope);
                scope.data.pop();
                if node == Node::Exists {
                    Formula::exists(v, body)
                } else {
                    Formula::forall(v, body)
                }
            }
            Node::Or | Node::And => {
                let l = self.formula(depth - 1, scope);
                let r = self.formula(depth - 1, scope);
                if node == Node::Or {
                    Formula::or(l, r)
                } else {
                    Formula::and(l, r)
                }
            }
            Node::Min | Node::Max => {
                let x = RecVar::new(&format!("X{}", self.next_rec));
                self.next_rec += 1;
                scope.rec.push((x.clone(), scope.modal_depth));
                let body = self.formula(depth.saturating_sub(1), scope);
                scope.rec.pop();
                // a fixed point that never recurses is still fine; one whose
                // body is just a leaf is dull, so give it one retry
                if node == Node::Min {
                    Formula::min(x, body)
                } else {
                    Formula::max(x, body)
                }
            }
        }
    }
}

/// Generates a well-formed closed formula of the requested fragment.
/// Fixed points are modally guarded and every binder is unique, so the
/// result is already in normal form.
pub fn gen_formula(seed: u64, fragment: Fragment, depth: usize, vars: usize) -> Formula {
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        max_vars: vars,
        next_data: 0,
        next_rec: 0,
        fragment,
    };
    let mut scope = Scope {
        data: Vec::new(),
        rec: Vec::new(),
        modal_depth: 0,
    };
    gen.formula(depth, &mut scope)
}

/// Values `v0..v{alphabet-1}`.
pub fn alphabet(size: usize) -> Vec<DataValue> {
    (0..size).map(|i| DataValue::new(&format!("v{i}"))).collect()
}

/// A uniformly random finite trace over `v0..v{alphabet-1}`.
pub fn gen_trace(seed: u64, length: usize, alphabet_size: usize) -> FiniteTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = alphabet(alphabet_size.max(1));
    (0..length)
        .map(|_| pool.choose(&mut rng).unwrap().clone())
        .collect()
}

/// A random lasso with the given prefix and (nonempty) loop lengths.
pub fn gen_lasso(seed: u64, prefix_len: usize, cycle_len: usize, alphabet_size: usize) -> LassoTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = alphabet(alphabet_size.max(1));
    let prefix = (0..prefix_len)
        .map(|_| pool.choose(&mut rng).unwrap().clone())
        .collect();
    let cycle = (0..cycle_len.max(1))
        .map(|_| pool.choose(&mut rng).unwrap().clone())
        .collect();
    LassoTrace::new(prefix, cycle).expect("nonempty cycle")
}

/// A random lasso built from the values of `w` plus fresh ones — the
/// extension shape used by the soundness suites.
pub fn gen_lasso_extending(seed: u64, w: &[DataValue], max_cycle: usize) -> LassoTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<DataValue> = Vec::new();
    for v in w {
        if !pool.contains(v) {
            pool.push(v.clone());
        }
    }
    pool.extend(datamon_core::trace::fresh_values(&pool, 2, "e"));
    let cycle_len = rng.gen_range(1..=max_cycle.max(1));
    let extra = rng.gen_range(0..=2usize);
    let mut prefix: Vec<DataValue> = w.to_vec();
    for _ in 0..extra {
        prefix.push(pool.choose(&mut rng).unwrap().clone());
    }
    let cycle = (0..cycle_len)
        .map(|_| pool.choose(&mut rng).unwrap().clone())
        .collect();
    LassoTrace::new(prefix, cycle).expect("nonempty cycle")
}

#[cfg(test)]
mod tests {
    use super::*;
    use datamon_core::fragments::classify;
    use datamon_core::norm::normalize;
    use std::collections::BTreeSet;

    #[test]
    fn generation_is_reproducible() {
        for seed in [0u64, 7, 42] {
            let a = gen_formula(seed, Fragment::CHmld, 4, 2);
            let b = gen_formula(seed, Fragment::CHmld, 4, 2);
            assert_eq!(a, b);
            assert_eq!(gen_trace(seed, 6, 3), gen_trace(seed, 6, 3));
        }
    }

    #[test]
    fn generated_formulas_live_in_their_fragment() {
        for fragment in Fragment::ALL {
            for seed in 0..250u64 {
                let f = gen_formula(seed, fragment, 4, 2);
                let report = classify(&f);
                assert!(
                    report.is_member(fragment),
                    "{fragment} seed {seed}: {f:?}"
                );
                let normalized = normalize(&f).unwrap();
                assert!(
                    normalized.modal_unguarded.is_empty(),
                    "{fragment} seed {seed} has an unguarded fixpoint"
                );
            }
        }
    }

    #[test]
    fn generated_hmld_has_no_fixpoints() {
        for seed in 0..200u64 {
            let f = gen_formula(seed, Fragment::Hmld, 4, 2);
            fn no_fix(f: &Formula) -> bool {
                !matches!(f, Formula::Min(_, _) | Formula::Max(_, _) | Formula::Var(_))
                    && f.children().iter().all(|(_, c)| no_fix(c))
            }
            assert!(no_fix(&f), "seed {seed}");
        }
    }

    #[test]
    fn traces_stay_in_the_alphabet() {
        let pool: BTreeSet<DataValue> = alphabet(2).into_iter().collect();
        for seed in 0..50u64 {
            for v in gen_trace(seed, 5, 2) {
                assert!(pool.contains(&v));
            }
        }
    }

    #[test]
    fn every_length_four_equality_type_appears() {
        // there are exactly B4 = 15 equality types of four-element words
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for seed in 0..1000u64 {
            let w = gen_trace(seed, 4, 4);
            seen.insert(datamon_core::trace::word_type(&w));
        }
        assert_eq!(seen.len(), 15);
    }
}
