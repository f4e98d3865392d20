//! Equality constraint stores over symbolic values.
//!
//! A guessed value starts life as an unconstrained symbol; guard
//! evaluation refines it with equalities (union-find merges, possibly
//! binding a class to a concrete value) and disequalities. Over an
//! infinite domain a store is satisfiable exactly when no disequality
//! edge connects a class to itself, which the mutating operations reject
//! up front, so stores are satisfiable by construction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::DataValue;

/// Either a concrete data value or a symbolic placeholder for a guessed one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymValue {
    Concrete(DataValue),
    Symbol(u32),
}

impl fmt::Display for SymValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymValue::Concrete(v) => write!(f, "{v}"),
            SymValue::Symbol(s) => write!(f, "?{s}"),
        }
    }
}

/// Canonical identity of a store entity: a symbol class or a value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Sym(u32),
    Val(DataValue),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unsat;

impl fmt::Display for Unsat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("constraint store became unsatisfiable")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintStore {
    /// union-find parent pointers (absent symbol = its own root)
    parent: BTreeMap<u32, u32>,
    /// concrete binding of a class, keyed by root
    bound: BTreeMap<u32, DataValue>,
    /// disequality edges between canonical keys, stored ordered
    diseq: BTreeSet<(Key, Key)>,
}

impl ConstraintStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn find(&self, mut s: u32) -> u32 {
        while let Some(&p) = self.parent.get(&s) {
            if p == s {
                break;
            }
            s = p;
        }
        s
    }

    /// Canonical key of a symbolic value under the current constraints.
    pub fn resolve(&self, v: &SymValue) -> Key {
        match v {
            SymValue::Concrete(d) => Key::Val(d.clone()),
            SymValue::Symbol(s) => {
                let root = self.find(*s);
                match self.bound.get(&root) {
                    Some(d) => Key::Val(d.clone()),
                    None => Key::Sym(root),
                }
            }
        }
    }

    fn ordered(a: Key, b: Key) -> (Key, Key) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Three-valued equality test: `Some(bool)` when entailed either way.
    pub fn entailed(&self, a: &SymValue, b: &SymValue) -> Option<bool> {
        let ka = self.resolve(a);
        let kb = self.resolve(b);
        if ka == kb {
            return Some(true);
        }
        if let (Key::Val(_), Key::Val(_)) = (&ka, &kb) {
            return Some(false);
        }
        if self.diseq.contains(&Self::ordered(ka, kb)) {
            return Some(false);
        }
        None
    }

    /// A copy of the store with `a = b` asserted.
    pub fn with_eq(&self, a: &SymValue, b: &SymValue) -> Result<ConstraintStore, Unsat> {
        let ka = self.resolve(a);
        let kb = self.resolve(b);
        if ka == kb {
            return Ok(self.clone());
        }
        if self.diseq.contains(&Self::ordered(ka.clone(), kb.clone())) {
            return Err(Unsat);
        }
        let mut out = self.clone();
        let replace = |k: &Key, from: &Key, to: &Key| -> Key {
            if k == from {
                to.clone()
            } else {
                k.clone()
            }
        };
        match (ka, kb) {
            (Key::Val(_), Key::Val(_)) => return Err(Unsat),
            (Key::Sym(root), Key::Val(d)) | (Key::Val(d), Key::Sym(root)) => {
                out.bound.insert(root, d.clone());
                let from = Key::Sym(root);
                let to = Key::Val(d);
                out.diseq = out
                    .diseq
                    .iter()
                    .map(|(x, y)| Self::ordered(replace(x, &from, &to), replace(y, &from, &to)))
                    .collect();
            }
            (Key::Sym(r1), Key::Sym(r2)) => {
                out.parent.insert(r2, r1);
                let from = Key::Sym(r2);
                let to = Key::Sym(r1);
                out.diseq = out
                    .diseq
                    .iter()
                    .map(|(x, y)| Self::ordered(replace(x, &from, &to), replace(y, &from, &to)))
                    .collect();
            }
        }
        // a merge may have collapsed a disequality onto one class
        if out.diseq.iter().any(|(x, y)| x == y) {
            return Err(Unsat);
        }
        Ok(out)
    }

    /// A copy of the store with `a != b` asserted.
    pub fn with_neq(&self, a: &SymValue, b: &SymValue) -> Result<ConstraintStore, Unsat> {
        let ka = self.resolve(a);
        let kb = self.resolve(b);
        if ka == kb {
            return Err(Unsat);
        }
        if let (Key::Val(_), Key::Val(_)) = (&ka, &kb) {
            return Ok(self.clone()); // distinct values, nothing to record
        }
        let mut out = self.clone();
        out.diseq.insert(Self::ordered(ka, kb));
        Ok(out)
    }

    /// All constraints as (lhs, rhs, is-equality) triples, suitable for
    /// replaying into another store.
    pub fn constraints(&self) -> Vec<(SymValue, SymValue, bool)> {
        let mut out = Vec::new();
        for (&s, &p) in &self.parent {
            if s != p {
                out.push((SymValue::Symbol(s), SymValue::Symbol(p), true));
            }
        }
        for (&root, d) in &self.bound {
            out.push((SymValue::Symbol(root), SymValue::Concrete(d.clone()), true));
        }
        for (x, y) in &self.diseq {
            let to_sym = |k: &Key| match k {
                Key::Sym(s) => SymValue::Symbol(*s),
                Key::Val(d) => SymValue::Concrete(d.clone()),
            };
            out.push((to_sym(x), to_sym(y), false));
        }
        out
    }

    /// Conjoins all constraints of `other` into this store.
    pub fn merged_with(&self, other: &ConstraintStore) -> Result<ConstraintStore, Unsat> {
        let mut out = self.clone();
        for (a, b, eq) in other.constraints() {
            out = if eq {
                out.with_eq(&a, &b)?
            } else {
                out.with_neq(&a, &b)?
            };
        }
        Ok(out)
    }

    /// Symbols mentioned anywhere in the store.
    pub fn symbols(&self) -> BTreeSet<u32> {
        let mut out: BTreeSet<u32> = BTreeSet::new();
        for (&s, &p) in &self.parent {
            out.insert(s);
            out.insert(p);
        }
        out.extend(self.bound.keys().copied());
        for (x, y) in &self.diseq {
            for k in [x, y] {
                if let Key::Sym(s) = k {
                    out.insert(*s);
                }
            }
        }
        out
    }

    /// Rewrites every symbol through `map` (total on the store's symbols).
    pub fn renamed(&self, map: &BTreeMap<u32, u32>) -> ConstraintStore {
        let m = |s: &u32| map[s];
        let mk = |k: &Key| match k {
            Key::Sym(s) => Key::Sym(m(s)),
            Key::Val(d) => Key::Val(d.clone()),
        };
        ConstraintStore {
            parent: self
                .parent
                .iter()
                .filter(|(s, p)| s != p)
                .map(|(s, p)| (m(s), m(p)))
                .collect(),
            bound: self.bound.iter().map(|(s, d)| (m(s), d.clone())).collect(),
            diseq: self
                .diseq
                .iter()
                .map(|(x, y)| Self::ordered(mk(x), mk(y)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> SymValue {
        SymValue::Concrete(DataValue::new(s))
    }

    fn s(i: u32) -> SymValue {
        SymValue::Symbol(i)
    }

    #[test]
    fn fresh_symbols_are_unconstrained() {
        let store = ConstraintStore::new();
        assert_eq!(store.entailed(&s(0), &v("1")), None);
        assert_eq!(store.entailed(&s(0), &s(1)), None);
        assert_eq!(store.entailed(&s(0), &s(0)), Some(true));
    }

    #[test]
    fn binding_propagates() {
        let store = ConstraintStore::new().with_eq(&s(0), &v("1")).unwrap();
        assert_eq!(store.entailed(&s(0), &v("1")), Some(true));
        assert_eq!(store.entailed(&s(0), &v("2")), Some(false));
        assert!(store.with_eq(&s(0), &v("2")).is_err());
    }

    #[test]
    fn merge_then_bind() {
        let store = ConstraintStore::new()
            .with_eq(&s(0), &s(1))
            .unwrap()
            .with_eq(&s(1), &v("7"))
            .unwrap();
        assert_eq!(store.entailed(&s(0), &v("7")), Some(true));
    }

    #[test]
    fn diseq_blocks_merge() {
        let store = ConstraintStore::new().with_neq(&s(0), &s(1)).unwrap();
        assert!(store.with_eq(&s(0), &s(1)).is_err());
        assert_eq!(store.entailed(&s(0), &s(1)), Some(false));
    }

    #[test]
    fn diseq_survives_binding() {
        let store = ConstraintStore::new()
            .with_neq(&s(0), &s(1))
            .unwrap()
            .with_eq(&s(0), &v("3"))
            .unwrap();
        assert_eq!(store.entailed(&s(1), &v("3")), Some(false));
        assert!(store.with_eq(&s(1), &v("3")).is_err());
        assert!(store.with_eq(&s(1), &v("4")).is_ok());
    }

    #[test]
    fn merging_stores_detects_conflicts() {
        let a = ConstraintStore::new().with_eq(&s(0), &v("1")).unwrap();
        let b = ConstraintStore::new().with_neq(&s(0), &v("1")).unwrap();
        assert!(a.merged_with(&b).is_err());
        let c = ConstraintStore::new().with_neq(&s(0), &v("2")).unwrap();
        assert!(a.merged_with(&c).is_ok());
    }
}
