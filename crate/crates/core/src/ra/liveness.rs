//! Emptiness-style liveness for nondeterministic register automata by
//! type abstraction: a state is abstracted to its location plus the
//! equality partition of its registers. Renaming stability makes the
//! abstraction exact, and there are finitely many partitions, so backward
//! reachability of the accepting locations decides which (location, type)
//! pairs can still accept some word.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataTerm};
use crate::ra::automaton::{AutomatonError, Label, RegisterAutomaton};

/// An equality partition of the registers: entry i is the index of the
/// first register in the same block.
pub type RegPartition = Vec<usize>;

/// All partitions of `n` registers, canonically labeled.
pub fn partitions(n: usize) -> Vec<RegPartition> {
    let mut out = Vec::new();
    let mut current: RegPartition = Vec::new();
    fn go(n: usize, current: &mut RegPartition, out: &mut Vec<RegPartition>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        let i = current.len();
        // join an existing block (labeled by its first member) or open a new one
        let mut firsts: Vec<usize> = current.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        firsts.push(i);
        for f in firsts {
            current.push(f);
            go(n, current, out);
            current.pop();
        }
    }
    go(n, &mut current, &mut out);
    out
}

/// Partitions reachable by reassigning register `r` to an arbitrary value:
/// it may join any other block or become a singleton.
pub fn partitions_after_guess(p: &RegPartition, r: usize) -> Vec<RegPartition> {
    let n = p.len();
    let mut base = p.clone();
    // detach r, relabeling any block it used to lead
    base[r] = r;
    for i in 0..n {
        if i != r && p[i] == r {
            // new leader: smallest remaining member
            let leader = (0..n).filter(|&j| j != r && p[j] == r).min().expect("nonempty");
            for j in 0..n {
                if j != r && p[j] == r {
                    base[j] = leader;
                }
            }
            break;
        }
    }
    let mut out = Vec::new();
    // singleton
    let mut singleton = base.clone();
    singleton[r] = r;
    out.push(canonicalize_partition(&singleton));
    // join each existing block
    let blocks: BTreeSet<usize> = (0..n).filter(|&i| i != r).map(|i| base[i]).collect();
    for b in blocks {
        let mut joined = base.clone();
        joined[r] = b;
        out.push(canonicalize_partition(&joined));
    }
    out.sort();
    out.dedup();
    out
}

fn canonicalize_partition(p: &RegPartition) -> RegPartition {
    // relabel each block by its smallest member
    let n = p.len();
    let mut out = alloc::vec![0usize; n];
    for i in 0..n {
        out[i] = (0..n).find(|&j| p[j] == p[i]).expect("some member");
    }
    out
}

/// The possible relations of the input value to a partition: equal to one
/// of the blocks, or fresh (distinct from every register).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarChoice {
    Block(usize),
    Fresh,
}

/// Evaluates a guard under a register partition and a choice for `*`.
pub fn guard_holds(
    b: &BExpr,
    partition: &RegPartition,
    registers: &[crate::ast::DataVar],
    star: StarChoice,
) -> bool {
    let class = |t: &DataTerm| -> Option<usize> {
        match t {
            DataTerm::Star => match star {
                StarChoice::Block(b) => Some(b),
                StarChoice::Fresh => None,
            },
            DataTerm::Var(x) => {
                let idx = registers.iter().position(|r| r == x).expect("validated");
                Some(partition[idx])
            }
        }
    };
    match b {
        BExpr::True => true,
        BExpr::Eq(l, r) => match (class(l), class(r)) {
            (Some(a), Some(b)) => a == b,
            // a fresh input differs from every register; star = star is
            // the same occurrence of the same value
            (None, None) => matches!((l, r), (DataTerm::Star, DataTerm::Star)),
            _ => false,
        },
        BExpr::Not(inner) => !guard_holds(inner, partition, registers, star),
        BExpr::And(l, r) => {
            guard_holds(l, partition, registers, star)
                && guard_holds(r, partition, registers, star)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LivenessError {
    Alternating,
    Automaton(AutomatonError),
}

impl fmt::Display for LivenessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LivenessError::Alternating => {
                f.write_str("liveness analysis requires a nondeterministic automaton (no universal locations)")
            }
            LivenessError::Automaton(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LivenessError {}

/// Liveness table of a nondeterministic register automaton: a
/// (location, type) pair is live iff some finite word is accepted from a
/// state with that location and register-equality type.
pub fn nra_liveness(
    a: &RegisterAutomaton,
) -> Result<BTreeMap<(usize, RegPartition), bool>, LivenessError> {
    a.validate().map_err(LivenessError::Automaton)?;
    if a.has_universal_locations() {
        return Err(LivenessError::Alternating);
    }
    let all_partitions = partitions(a.registers.len());
    let mut live: BTreeSet<(usize, RegPartition)> = BTreeSet::new();
    for loc in a.accepting_locations() {
        for p in &all_partitions {
            live.insert((loc, p.clone()));
        }
    }
    // backward fixpoint over the finite abstraction
    loop {
        let mut grew = false;
        for loc in 0..a.locations.len() {
            for p in &all_partitions {
                if live.contains(&(loc, p.clone())) {
                    continue;
                }
                let mut reaches = false;
                'edges: for t in a.transitions_from(loc) {
                    match &t.label {
                        Label::Eps => {
                            if live.contains(&(t.to, p.clone())) {
                                reaches = true;
                                break 'edges;
                            }
                        }
                        Label::Guess(r) => {
                            for q in partitions_after_guess(p, *r) {
                                if live.contains(&(t.to, q)) {
                                    reaches = true;
                                    break 'edges;
                                }
                            }
                        }
                        Label::Guard(b) => {
                            let mut choices: Vec<StarChoice> = alloc::vec![StarChoice::Fresh];
                            let blocks: BTreeSet<usize> = p.iter().copied().collect();
                            choices.extend(blocks.into_iter().map(StarChoice::Block));
                            for star in choices {
                                if guard_holds(b, p, &a.registers, star)
                                    && live.contains(&(t.to, p.clone()))
                                {
                                    reaches = true;
                                    break 'edges;
                                }
                            }
                        }
                    }
                }
                if reaches {
                    live.insert((loc, p.clone()));
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let mut table = BTreeMap::new();
    for loc in 0..a.locations.len() {
        for p in &all_partitions {
            table.insert((loc, p.clone()), live.contains(&(loc, p.clone())));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::DataVar;
    use crate::ra::automaton::{Location, LocKind, Transition};

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(partitions(0).len(), 1);
        assert_eq!(partitions(1).len(), 1);
        assert_eq!(partitions(2).len(), 2);
        assert_eq!(partitions(3).len(), 5);
        assert_eq!(partitions(4).len(), 15);
    }

    #[test]
    fn guess_reaches_all_block_choices() {
        // two registers apart: after re-guessing r1 it may join r0 or stay apart
        let p = alloc::vec![0, 1];
        let qs = partitions_after_guess(&p, 1);
        assert!(qs.contains(&alloc::vec![0, 0]));
        assert!(qs.contains(&alloc::vec![0, 1]));
        assert_eq!(qs.len(), 2);
    }

    fn one_reg_automaton(accepting_reachable: bool) -> RegisterAutomaton {
        let x = DataVar::new("x");
        RegisterAutomaton {
            locations: alloc::vec![
                Location { name: "a".into(), kind: LocKind::Existential, accepting: false },
                Location { name: "b".into(), kind: LocKind::Existential, accepting: true },
            ],
            registers: alloc::vec![x.clone()],
            initial: 0,
            init_values: RegisterAutomaton::sentinel_values(1),
            transitions: if accepting_reachable {
                alloc::vec![Transition { from: 0, to: 1, label: Label::Guard(BExpr::star_eq(&x)) }]
            } else {
                alloc::vec![]
            },
        }
    }

    #[test]
    fn everything_live_when_accepting_everywhere() {
        let mut a = one_reg_automaton(true);
        a.locations[0].accepting = true;
        let table = nra_liveness(&a).unwrap();
        assert!(table.values().all(|&v| v));
    }

    #[test]
    fn nothing_live_when_accepting_unreachable() {
        let a = one_reg_automaton(false);
        let table = nra_liveness(&a).unwrap();
        let p = alloc::vec![0usize];
        assert!(!table[&(0, p.clone())]);
        assert!(table[&(1, p)]); // the accepting location itself stays live
    }

    #[test]
    fn rejects_alternating_automata() {
        let mut a = one_reg_automaton(true);
        a.locations[0].kind = LocKind::Universal;
        assert!(matches!(nra_liveness(&a), Err(LivenessError::Alternating)));
    }
}
