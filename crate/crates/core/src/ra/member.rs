//! Word membership for alternating register automata with guessing,
//! decided by the same symbolic constraint engine as the monitor runtime:
//! guesses bind fresh symbols and guard evaluation case-splits over the
//! undetermined atoms. Existential locations pick a split and a
//! transition; universal locations pick a split and then every enabled
//! transition must succeed (none enabled counts as success).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataTerm, DataValue};
use crate::budget::{Budget, BudgetExceeded};
use crate::monitor::store::{ConstraintStore, SymValue};
use crate::ra::automaton::{AutomatonError, Label, LocKind, RegisterAutomaton};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemberError {
    Automaton(AutomatonError),
    Budget(BudgetExceeded),
}

impl fmt::Display for MemberError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberError::Automaton(e) => e.fmt(f),
            MemberError::Budget(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MemberError {}

type State = (usize, Vec<SymValue>, ConstraintStore);

fn canon_state(loc: usize, vals: &[SymValue], store: &ConstraintStore) -> State {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    for v in vals {
        if let SymValue::Symbol(s) = v {
            let n = map.len() as u32;
            map.entry(*s).or_insert(n);
        }
    }
    for s in store.symbols() {
        let n = map.len() as u32;
        map.entry(s).or_insert(n);
    }
    let vals = vals
        .iter()
        .map(|v| match v {
            SymValue::Symbol(s) => SymValue::Symbol(map[s]),
            c => c.clone(),
        })
        .collect();
    (loc, vals, store.renamed(&map))
}

fn next_symbol(vals: &[SymValue], store: &ConstraintStore) -> u32 {
    let mut max = 0u32;
    for v in vals {
        if let SymValue::Symbol(s) = v {
            max = max.max(s + 1);
        }
    }
    for s in store.symbols() {
        max = max.max(s + 1);
    }
    max
}

struct Member<'a> {
    ra: &'a RegisterAutomaton,
    w: &'a [DataValue],
    budget: &'a mut Budget,
    path: BTreeSet<(State, usize)>,
    success: BTreeSet<(State, usize)>,
}

// enumerates the consistent refinements of `store` over the atoms of the
// given guards, yielding (refined store, per-guard truth) pairs
fn joint_splits(
    guards: &[&BExpr],
    vals: &[SymValue],
    d: &DataValue,
    store: &ConstraintStore,
    registers: &[crate::ast::DataVar],
) -> Vec<(ConstraintStore, Vec<bool>)> {
    let lookup = |t: &DataTerm| -> SymValue {
        match t {
            DataTerm::Star => SymValue::Concrete(d.clone()),
            DataTerm::Var(x) => {
                let idx = registers.iter().position(|r| r == x).expect("validated");
                vals[idx].clone()
            }
        }
    };
    let mut atoms: Vec<(SymValue, SymValue)> = Vec::new();
    fn collect(
        b: &BExpr,
        lookup: &impl Fn(&DataTerm) -> SymValue,
        out: &mut Vec<(SymValue, SymValue)>,
    ) {
        match b {
            BExpr::True => {}
            BExpr::Eq(l, r) => {
                let pair = (lookup(l), lookup(r));
                if !out.contains(&pair) {
                    out.push(pair);
                }
            }
            BExpr::Not(inner) => collect(inner, lookup, out),
            BExpr::And(l, r) => {
                collect(l, lookup, out);
                collect(r, lookup, out);
            }
        }
    }
    for g in guards {
        collect(g, &lookup, &mut atoms);
    }
    let mut complete = Vec::new();
    let mut stack = alloc::vec![(store.clone(), Vec::<bool>::new())];
    while let Some((s, values)) = stack.pop() {
        if values.len() == atoms.len() {
            let assignment: BTreeMap<(SymValue, SymValue), bool> =
                atoms.iter().cloned().zip(values.iter().copied()).collect();
            fn eval(
                b: &BExpr,
                lookup: &impl Fn(&DataTerm) -> SymValue,
                assignment: &BTreeMap<(SymValue, SymValue), bool>,
            ) -> bool {
                match b {
                    BExpr::True => true,
                    BExpr::Eq(l, r) => assignment[&(lookup(l), lookup(r))],
                    BExpr::Not(inner) => !eval(inner, lookup, assignment),
                    BExpr::And(l, r) => {
                        eval(l, lookup, assignment) && eval(r, lookup, assignment)
                    }
                }
            }
            let truths = guards.iter().map(|g| eval(g, &lookup, &assignment)).collect();
            complete.push((s, truths));
            continue;
        }
        let (a, b) = &atoms[values.len()];
        match s.entailed(a, b) {
            Some(t) => {
                let mut vs = values.clone();
                vs.push(t);
                stack.push((s, vs));
            }
            None => {
                if let Ok(se) = s.with_eq(a, b) {
                    let mut vs = values.clone();
                    vs.push(true);
                    stack.push((se, vs));
                }
                if let Ok(sn) = s.with_neq(a, b) {
                    let mut vs = values.clone();
                    vs.push(false);
                    stack.push((sn, vs));
                }
            }
        }
    }
    complete
}

impl<'a> Member<'a> {
    fn accepts(
        &mut self,
        loc: usize,
        vals: &[SymValue],
        store: &ConstraintStore,
        pos: usize,
    ) -> Result<bool, MemberError> {
        self.budget.spend(1).map_err(MemberError::Budget)?;
        if pos == self.w.len() && self.ra.locations[loc].accepting {
            return Ok(true);
        }
        let key = (canon_state(loc, vals, store), pos);
        if self.success.contains(&key) {
            return Ok(true);
        }
        if self.path.contains(&key) {
            return Ok(false); // a run may not loop without progress
        }
        self.path.insert(key.clone());
        let result = self.accepts_inner(loc, vals, store, pos);
        self.path.remove(&key);
        if let Ok(true) = result {
            self.success.insert(key);
        }
        result
    }

    fn accepts_inner(
        &mut self,
        loc: usize,
        vals: &[SymValue],
        store: &ConstraintStore,
        pos: usize,
    ) -> Result<bool, MemberError> {
        let eps_targets: Vec<usize> = self
            .ra
            .transitions_from(loc)
            .filter(|t| matches!(t.label, Label::Eps))
            .map(|t| t.to)
            .collect();
        let guesses: Vec<(usize, usize)> = self
            .ra
            .transitions_from(loc)
            .filter_map(|t| match t.label {
                Label::Guess(r) => Some((r, t.to)),
                _ => None,
            })
            .collect();
        let guard_edges: Vec<(&BExpr, usize)> = self
            .ra
            .transitions_from(loc)
            .filter_map(|t| match &t.label {
                Label::Guard(b) => Some((b, t.to)),
                _ => None,
            })
            .collect();

        match self.ra.locations[loc].kind {
            LocKind::Existential => {
                for &to in &eps_targets {
                    if self.accepts(to, vals, store, pos)? {
                        return Ok(true);
                    }
                }
                for &(r, to) in &guesses {
                    let sym = next_symbol(vals, store);
                    let mut vals2 = vals.to_vec();
                    vals2[r] = SymValue::Symbol(sym);
                    if self.accepts(to, &vals2, store, pos)? {
                        return Ok(true);
                    }
                }
                if pos < self.w.len() && !guard_edges.is_empty() {
                    let guards: Vec<&BExpr> = guard_edges.iter().map(|(b, _)| *b).collect();
                    let splits = joint_splits(
                        &guards,
                        vals,
                        &self.w[pos],
                        store,
                        &self.ra.registers,
                    );
                    for (refined, truths) in splits {
                        for (i, &(_, to)) in guard_edges.iter().enumerate() {
                            if truths[i] && self.accepts(to, vals, &refined, pos + 1)? {
                                return Ok(true);
                            }
                        }
                    }
                }
                Ok(false)
            }
            LocKind::Universal => {
                // every ε-successor must accept the same suffix
                for &to in &eps_targets {
                    if !self.accepts(to, vals, store, pos)? {
                        return Ok(false);
                    }
                }
                if pos < self.w.len() && !guard_edges.is_empty() {
                    // existentially refine the guessed values, then all
                    // enabled transitions must accept
                    let guards: Vec<&BExpr> = guard_edges.iter().map(|(b, _)| *b).collect();
                    let splits = joint_splits(
                        &guards,
                        vals,
                        &self.w[pos],
                        store,
                        &self.ra.registers,
                    );
                    'split: for (refined, truths) in splits {
                        for (i, &(_, to)) in guard_edges.iter().enumerate() {
                            if truths[i] && !self.accepts(to, vals, &refined, pos + 1)? {
                                continue 'split;
                            }
                        }
                        return Ok(true);
                    }
                    return Ok(false);
                }
                // no consumable successors: vacuously final
                Ok(true)
            }
        }
    }
}

/// Decides whether the automaton has an accepting run on `w` from its
/// initial state, within the work budget.
pub fn ra_member_budgeted(
    a: &RegisterAutomaton,
    w: &[DataValue],
    budget: &mut Budget,
) -> Result<bool, MemberError> {
    a.validate().map_err(MemberError::Automaton)?;
    let vals: Vec<SymValue> = a
        .init_values
        .iter()
        .map(|v| SymValue::Concrete(v.clone()))
        .collect();
    let mut member = Member {
        ra: a,
        w,
        budget,
        path: BTreeSet::new(),
        success: BTreeSet::new(),
    };
    member.accepts(a.initial, &vals, &ConstraintStore::new(), 0)
}

/// [`ra_member_budgeted`] with the default budget.
pub fn ra_member(a: &RegisterAutomaton, w: &[DataValue]) -> Result<bool, MemberError> {
    ra_member_budgeted(a, w, &mut Budget::default())
}

pub(crate) fn joint_splits_for(
    guards: &[&BExpr],
    vals: &[SymValue],
    d: &DataValue,
    store: &ConstraintStore,
    registers: &[crate::ast::DataVar],
) -> Vec<(ConstraintStore, Vec<bool>)> {
    joint_splits(guards, vals, d, store, registers)
}

pub(crate) fn canon_state_for(loc: usize, vals: &[SymValue], store: &ConstraintStore) -> State {
    canon_state(loc, vals, store)
}

pub(crate) fn next_symbol_for(vals: &[SymValue], store: &ConstraintStore) -> u32 {
    next_symbol(vals, store)
}
