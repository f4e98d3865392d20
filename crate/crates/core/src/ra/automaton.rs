//! Alternating register automata with existential guessing.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataValue, DataVar};
use crate::trace::fresh_values;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocKind {
    Existential,
    Universal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub kind: LocKind,
    pub accepting: bool,
}

/// Transition labels: equality guards over registers and the current
/// value, nondeterministic register reassignment, or an internal ε-step
/// (a construction artifact the export format mostly eliminates).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Label {
    Guard(BExpr),
    Guess(usize),
    Eps,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub label: Label,
}

/// A register automaton: locations partitioned existential/universal,
/// registers holding data values, an initial location and valuation, an
/// accepting set, and guard/guess transitions. Guessing (and the internal
/// ε) is only permitted from existential locations, except that the
/// ⊗-gadget of the monitor translation uses universal ε-branching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterAutomaton {
    pub locations: Vec<Location>,
    pub registers: Vec<DataVar>,
    pub initial: usize,
    /// pairwise-distinct reserved sentinels; they never appear in traces
    pub init_values: Vec<DataValue>,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutomatonError {
    BadReference(String),
    UniversalGuess { location: String },
    GuardVariableNotARegister { variable: String },
}

impl fmt::Display for AutomatonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutomatonError::BadReference(s) => write!(f, "malformed automaton: {s}"),
            AutomatonError::UniversalGuess { location } => {
                write!(f, "guessing from universal location `{location}` is not allowed")
            }
            AutomatonError::GuardVariableNotARegister { variable } => {
                write!(f, "guard mentions `{variable}` which is not a register")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AutomatonError {}

impl RegisterAutomaton {
    /// Default pairwise-distinct sentinel valuation for `n` registers.
    pub fn sentinel_values(n: usize) -> Vec<DataValue> {
        fresh_values(&[], n, "r")
    }

    pub fn validate(&self) -> Result<(), AutomatonError> {
        if self.initial >= self.locations.len() {
            return Err(AutomatonError::BadReference("initial location".into()));
        }
        if self.init_values.len() != self.registers.len() {
            return Err(AutomatonError::BadReference(
                "initial valuation arity differs from the register count".into(),
            ));
        }
        for t in &self.transitions {
            if t.from >= self.locations.len() || t.to >= self.locations.len() {
                return Err(AutomatonError::BadReference(format!(
                    "transition {} -> {} out of range",
                    t.from, t.to
                )));
            }
            match &t.label {
                Label::Guess(r) => {
                    if *r >= self.registers.len() {
                        return Err(AutomatonError::BadReference(format!(
                            "guess into unknown register {r}"
                        )));
                    }
                    if self.locations[t.from].kind == LocKind::Universal {
                        return Err(AutomatonError::UniversalGuess {
                            location: self.locations[t.from].name.clone(),
                        });
                    }
                }
                Label::Guard(b) => {
                    for v in b.vars() {
                        if !self.registers.contains(&v) {
                            return Err(AutomatonError::GuardVariableNotARegister {
                                variable: v.as_str().to_string(),
                            });
                        }
                    }
                }
                Label::Eps => {}
            }
        }
        Ok(())
    }

    pub fn transitions_from(&self, loc: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == loc)
    }

    pub fn has_universal_locations(&self) -> bool {
        self.locations.iter().any(|l| l.kind == LocKind::Universal)
    }

    pub fn accepting_locations(&self) -> Vec<usize> {
        (0..self.locations.len())
            .filter(|&i| self.locations[i].accepting)
            .collect()
    }

    /// Register index by name.
    pub fn register(&self, x: &DataVar) -> Option<usize> {
        self.registers.iter().position(|r| r == x)
    }

    /// Replaces ε-steps from existential locations by dummy guesses into a
    /// reserved scratch register. ε from universal locations (the ⊗
    /// gadget) cannot be simulated that way — the model forbids universal
    /// guessing — and is left in place.
    pub fn eliminate_existential_eps(&self) -> RegisterAutomaton {
        let needs_scratch = self.transitions.iter().any(|t| {
            matches!(t.label, Label::Eps) && self.locations[t.from].kind == LocKind::Existential
        });
        let mut out = self.clone();
        if !needs_scratch {
            return out;
        }
        let mut scratch_base = String::from("_eps");
        while out.registers.iter().any(|r| r.as_str() == scratch_base) {
            scratch_base.push('_');
        }
        let scratch_name = DataVar::new(&scratch_base);
        let scratch = match out.register(&scratch_name) {
            Some(i) => i,
            None => {
                out.registers.push(scratch_name);
                let avoid = out.init_values.clone();
                out.init_values
                    .extend(fresh_values(&avoid, 1, "rscratch"));
                out.registers.len() - 1
            }
        };
        for t in &mut out.transitions {
            if matches!(t.label, Label::Eps)
                && out.locations[t.from].kind == LocKind::Existential
            {
                t.label = Label::Guess(scratch);
            }
        }
        out
    }
}
