//! Translations between monitors and register automata: the gadget-based
//! monitor-to-automaton construction, the unravelling of an automaton
//! into simple paths, and the reverse construction that rebuilds a
//! monitor from an unravelled irrevocable automaton.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataVar, RecVar};
use crate::monitor::{tau_divergent, Monitor};
use crate::ra::automaton::{
    AutomatonError, Label, LocKind, Location, RegisterAutomaton, Transition,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TranslateError {
    OpenMonitor(String),
    TauDivergent(String),
    Automaton(AutomatonError),
    NotIrrevocable(String),
}

impl fmt::Display for TranslateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateError::OpenMonitor(x) => {
                write!(f, "monitor has free recursion variable `{x}`")
            }
            TranslateError::TauDivergent(x) => {
                write!(f, "monitor recursion `{x}` diverges without reading events")
            }
            TranslateError::Automaton(e) => e.fmt(f),
            TranslateError::NotIrrevocable(s) => {
                write!(f, "automaton is not in irrevocable form: {s}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TranslateError {}

/// Builds the alternating register automaton of a closed monitor:
/// locations are the distinct submonitors, parallel products are the
/// universal locations, registers are the monitor's data variables, and
/// each submonitor contributes its gadget transitions (ε for forking,
/// recursion and back edges; guard and guess prefixes verbatim).
pub fn monitor_to_ra(m: &Monitor) -> Result<RegisterAutomaton, TranslateError> {
    if let Some(x) = m.free_rec_vars().iter().next() {
        return Err(TranslateError::OpenMonitor(x.as_str().to_string()));
    }
    if let Some(x) = tau_divergent(m) {
        return Err(TranslateError::TauDivergent(x.as_str().to_string()));
    }
    let registers: Vec<DataVar> = m.data_vars();
    let mut ids: BTreeMap<Monitor, usize> = BTreeMap::new();
    let mut order: Vec<Monitor> = Vec::new();
    fn collect(m: &Monitor, ids: &mut BTreeMap<Monitor, usize>, order: &mut Vec<Monitor>) {
        if ids.contains_key(m) {
            return;
        }
        ids.insert(m.clone(), order.len());
        order.push(m.clone());
        for c in m.children() {
            collect(c, ids, order);
        }
    }
    collect(m, &mut ids, &mut order);

    // each recursion variable's binder submonitor (unique binders assumed)
    let mut binders: BTreeMap<RecVar, usize> = BTreeMap::new();
    for (sub, &id) in &ids {
        if let Monitor::Rec(x, _) = sub {
            binders.insert(x.clone(), id);
        }
    }

    let mut locations = Vec::new();
    let mut transitions = Vec::new();
    for (id, sub) in order.iter().enumerate() {
        let kind = if matches!(sub, Monitor::ParAnd(_, _)) {
            LocKind::Universal
        } else {
            LocKind::Existential
        };
        locations.push(Location {
            name: format!("q{id}"),
            kind,
            accepting: matches!(sub, Monitor::Yes),
        });
        match sub {
            Monitor::Yes | Monitor::End => transitions.push(Transition {
                from: id,
                to: id,
                label: Label::Guard(BExpr::True),
            }),
            Monitor::Guard(b, n) => transitions.push(Transition {
                from: id,
                to: ids[&**n],
                label: Label::Guard(b.clone()),
            }),
            Monitor::Guess(x, n) => transitions.push(Transition {
                from: id,
                to: ids[&**n],
                label: Label::Guess(
                    registers.iter().position(|r| r == x).expect("collected"),
                ),
            }),
            Monitor::ParOr(l, r) | Monitor::ParAnd(l, r) => {
                transitions.push(Transition {
                    from: id,
                    to: ids[&**l],
                    label: Label::Eps,
                });
                transitions.push(Transition {
                    from: id,
                    to: ids[&**r],
                    label: Label::Eps,
                });
            }
            Monitor::Rec(_, n) => transitions.push(Transition {
                from: id,
                to: ids[&**n],
                label: Label::Eps,
            }),
            Monitor::Var(x) => transitions.push(Transition {
                from: id,
                to: binders[x],
                label: Label::Eps,
            }),
        }
    }
    let ra = RegisterAutomaton {
        locations,
        initial: ids[m],
        init_values: RegisterAutomaton::sentinel_values(registers.len()),
        registers,
        transitions,
    };
    ra.validate().map_err(TranslateError::Automaton)?;
    Ok(ra)
}

/// The unravelling: locations are the simple paths of the automaton,
/// reachable from the initial one; a transition from path P·ℓ on edge
/// ℓ → ℓ′ goes to P·ℓ·ℓ′ when ℓ′ is fresh, and truncates back to the
/// prefix ending at ℓ′ when ℓ′ already occurs on the path.
pub fn unravel(a: &RegisterAutomaton) -> (RegisterAutomaton, Vec<Vec<usize>>) {
    let mut paths: Vec<Vec<usize>> = alloc::vec![alloc::vec![a.initial]];
    let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    index.insert(paths[0].clone(), 0);
    let mut transitions: Vec<Transition> = Vec::new();
    let mut frontier = alloc::vec![0usize];
    while let Some(pid) = frontier.pop() {
        let path = paths[pid].clone();
        let last = *path.last().expect("paths are nonempty");
        for t in a.transitions_from(last) {
            // the • operator: append if fresh, truncate at the revisit
            let target_path: Vec<usize> = match path.iter().position(|&l| l == t.to) {
                Some(i) => path[..=i].to_vec(),
                None => {
                    let mut p = path.clone();
                    p.push(t.to);
                    p
                }
            };
            let tid = match index.get(&target_path) {
                Some(&i) => i,
                None => {
                    let i = paths.len();
                    index.insert(target_path.clone(), i);
                    paths.push(target_path);
                    frontier.push(i);
                    i
                }
            };
            transitions.push(Transition {
                from: pid,
                to: tid,
                label: t.label.clone(),
            });
        }
    }
    let locations: Vec<Location> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let last = *p.last().expect("nonempty");
            Location {
                name: format!("p{i}"),
                kind: a.locations[last].kind,
                accepting: a.locations[last].accepting,
            }
        })
        .collect();
    (
        RegisterAutomaton {
            locations,
            registers: a.registers.clone(),
            initial: 0,
            init_values: a.init_values.clone(),
            transitions,
        },
        paths,
    )
}

/// Rebuilds a monitor from an irrevocable automaton (single accepting
/// sink; universal guessing rejected by validation). Existential
/// locations become sums over their transitions, universal ones products;
/// back edges of the unravelling become recursion variables. ε edges
/// contribute bare summands.
pub fn ra_to_monitor(a: &RegisterAutomaton) -> Result<Monitor, TranslateError> {
    a.validate().map_err(TranslateError::Automaton)?;
    let accepting = a.accepting_locations();
    if accepting.is_empty() {
        return Ok(Monitor::End); // the empty language monitor
    }
    if accepting.len() > 1 {
        return Err(TranslateError::NotIrrevocable(format!(
            "{} accepting locations (want a single sink)",
            accepting.len()
        )));
    }
    let sink = accepting[0];
    for t in a.transitions_from(sink) {
        if t.to != sink {
            return Err(TranslateError::NotIrrevocable(
                "the accepting location has an outgoing edge that leaves it".into(),
            ));
        }
    }

    let (unravelled, _) = unravel(a);
    // monitor for each path location, built recursively; the recursion is
    // well-founded because paths strictly extend until they truncate
    fn build(
        u: &RegisterAutomaton,
        loc: usize,
        registers: &[DataVar],
    ) -> Monitor {
        if u.locations[loc].accepting {
            return Monitor::Yes;
        }
        let rec_name = RecVar::new(&format!("X{loc}"));
        let mut summands: Vec<Monitor> = Vec::new();
        for t in u.transitions_from(loc) {
            // a back edge targets a strict prefix path, which in the
            // unravelling has a smaller discovery index
            let inner = if t.to > loc {
                build(u, t.to, registers)
            } else {
                Monitor::Var(RecVar::new(&format!("X{}", t.to)))
            };
            let summand = match &t.label {
                Label::Guard(b) => Monitor::guard(b.clone(), inner),
                Label::Guess(r) => Monitor::Guess(registers[*r].clone(), Box::new(inner)),
                Label::Eps => inner,
            };
            summands.push(summand);
        }
        let universal = u.locations[loc].kind == LocKind::Universal;
        let body = if summands.is_empty() {
            // an existential dead end accepts nothing; a universal one
            // accepts everything
            if universal {
                Monitor::Yes
            } else {
                Monitor::End
            }
        } else {
            let mut it = summands.into_iter();
            let first = it.next().expect("nonempty");
            it.fold(first, |acc, s| {
                if universal {
                    Monitor::par_and(acc, s)
                } else {
                    Monitor::par_or(acc, s)
                }
            })
        };
        Monitor::Rec(rec_name, Box::new(body))
    }
    Ok(build(&unravelled, 0, &a.registers))
}
