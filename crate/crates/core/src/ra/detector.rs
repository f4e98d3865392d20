//! The violation-optimal bad-prefix detector for the disjunctive
//! fragment: run the formula's nondeterministic register automaton
//! symbolically and report Bad at the first prefix where every reachable
//! (location, type) abstraction is dead — by liveness exactness that is
//! the first prefix with no satisfying extension. Combined with the
//! plain acceptance monitor this yields a two-sided monitor that is
//! satisfaction-complete and violation-optimal.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{DataEnv, DataValue, Formula, Path};
use crate::fragments::{classify, Fragment};
use crate::monitor::store::{ConstraintStore, SymValue};
use crate::monitor::{synthesize, MonitorSession, RuntimeError, SynthesisError, Verdict};
use crate::ra::automaton::{Label, RegisterAutomaton};
use crate::ra::liveness::{nra_liveness, partitions, LivenessError, RegPartition};
use crate::ra::member::joint_splits_for;
use crate::ra::translate::{monitor_to_ra, TranslateError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DetectorError {
    NotInFragment(Path),
    Synthesis(SynthesisError),
    Translate(TranslateError),
    Liveness(LivenessError),
    Runtime(RuntimeError),
}

impl fmt::Display for DetectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorError::NotInFragment(p) => write!(
                f,
                "the optimal detector requires a disjHMLd formula; offending node at {}",
                crate::ast::path_string(p)
            ),
            DetectorError::Synthesis(e) => e.fmt(f),
            DetectorError::Translate(e) => e.fmt(f),
            DetectorError::Liveness(e) => e.fmt(f),
            DetectorError::Runtime(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DetectorError {}

type SymState = (usize, Vec<SymValue>, ConstraintStore);

/// Streams events through a nondeterministic register automaton and
/// reports the first index at which no reachable configuration can accept
/// any extension. `Bad(0)` fires before any event when the initial state
/// is already dead.
#[derive(Clone, Debug)]
pub struct BadPrefixDetector {
    ra: RegisterAutomaton,
    liveness: BTreeMap<(usize, RegPartition), bool>,
    frontier: Vec<SymState>,
    events: usize,
    fired: Option<usize>,
}

impl BadPrefixDetector {
    pub fn from_nra(ra: RegisterAutomaton) -> Result<Self, DetectorError> {
        let liveness = nra_liveness(&ra).map_err(DetectorError::Liveness)?;
        let init: SymState = (
            ra.initial,
            ra.init_values
                .iter()
                .map(|v| SymValue::Concrete(v.clone()))
                .collect(),
            ConstraintStore::new(),
        );
        let mut detector = BadPrefixDetector {
            frontier: closure(&ra, alloc::vec![init]),
            ra,
            liveness,
            events: 0,
            fired: None,
        };
        if !detector.any_live() {
            detector.fired = Some(0);
        }
        Ok(detector)
    }

    /// The index at which Bad fired, if it has.
    pub fn fired(&self) -> Option<usize> {
        self.fired
    }

    pub fn events(&self) -> usize {
        self.events
    }

    pub fn frontier_size(&self) -> usize {
        self.frontier.len()
    }

    fn any_live(&self) -> bool {
        self.frontier
            .iter()
            .any(|s| state_is_live(&self.liveness, s))
    }

    pub fn feed(&mut self, d: &DataValue) {
        self.events += 1;
        if self.fired.is_some() {
            return;
        }
        let mut next: Vec<SymState> = Vec::new();
        for (loc, vals, store) in &self.frontier {
            let guard_edges: Vec<(&crate::ast::BExpr, usize)> = self
                .ra
                .transitions_from(*loc)
                .filter_map(|t| match &t.label {
                    Label::Guard(b) => Some((b, t.to)),
                    _ => None,
                })
                .collect();
            if guard_edges.is_empty() {
                continue;
            }
            let guards: Vec<&crate::ast::BExpr> = guard_edges.iter().map(|(b, _)| *b).collect();
            for (refined, truths) in
                joint_splits_for(&guards, vals, d, store, &self.ra.registers)
            {
                for (i, &(_, to)) in guard_edges.iter().enumerate() {
                    if truths[i] {
                        push_state(&mut next, (to, vals.clone(), refined.clone()));
                    }
                }
            }
        }
        self.frontier = closure(&self.ra, next);
        if !self.any_live() {
            self.fired = Some(self.events);
        }
    }
}

fn push_state(out: &mut Vec<SymState>, s: SymState) {
    let canon = crate::ra::member::canon_state_for(s.0, &s.1, &s.2);
    if !out
        .iter()
        .any(|t| crate::ra::member::canon_state_for(t.0, &t.1, &t.2) == canon)
    {
        out.push(s);
    }
}

// ε/guess closure of a frontier
fn closure(ra: &RegisterAutomaton, init: Vec<SymState>) -> Vec<SymState> {
    let mut out: Vec<SymState> = Vec::new();
    let mut seen: BTreeSet<SymState> = BTreeSet::new();
    let mut stack = init;
    while let Some((loc, vals, store)) = stack.pop() {
        let canon = crate::ra::member::canon_state_for(loc, &vals, &store);
        if !seen.insert(canon) {
            continue;
        }
        for t in ra.transitions_from(loc) {
            match &t.label {
                Label::Eps => stack.push((t.to, vals.clone(), store.clone())),
                Label::Guess(r) => {
                    let sym = crate::ra::member::next_symbol_for(&vals, &store);
                    let mut vals2 = vals.clone();
                    vals2[*r] = SymValue::Symbol(sym);
                    stack.push((t.to, vals2, store.clone()));
                }
                Label::Guard(_) => {}
            }
        }
        push_state(&mut out, (loc, vals, store));
    }
    out
}

// a symbolic state is live iff some register partition consistent with its
// store is live in the abstraction
fn state_is_live(
    liveness: &BTreeMap<(usize, RegPartition), bool>,
    (loc, vals, store): &SymState,
) -> bool {
    let n = vals.len();
    'parts: for p in partitions(n) {
        // build the partition's constraints on top of the store
        let mut s = store.clone();
        for i in 0..n {
            for j in 0..i {
                if p[i] == p[j] {
                    match s.with_eq(&vals[i], &vals[j]) {
                        Ok(s2) => s = s2,
                        Err(_) => continue 'parts,
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                if p[i] != p[j] {
                    match s.with_neq(&vals[i], &vals[j]) {
                        Ok(s2) => s = s2,
                        Err(_) => continue 'parts,
                    }
                }
            }
        }
        if liveness[&(*loc, p)] {
            return true;
        }
    }
    false
}

/// Two-sided monitor for a disjunctive-fragment formula: acceptance from
/// the synthesized monitor (sound and satisfaction-complete), rejection
/// from the bad-prefix detector (violation-optimal).
#[derive(Clone, Debug)]
pub struct OptimalMonitor {
    session: MonitorSession,
    detector: BadPrefixDetector,
    events: usize,
    verdict: Verdict,
}

impl OptimalMonitor {
    pub fn new(f: &Formula, env0: &DataEnv) -> Result<Self, DetectorError> {
        let report = classify(f);
        if !report.is_member(Fragment::DisjHmld) {
            let witness = report
                .status(Fragment::DisjHmld)
                .witness
                .clone()
                .unwrap_or_default();
            return Err(DetectorError::NotInFragment(witness));
        }
        let m = synthesize(f).map_err(DetectorError::Synthesis)?;
        let ra = monitor_to_ra(&m).map_err(DetectorError::Translate)?;
        let detector = BadPrefixDetector::from_nra(ra)?;
        let session = MonitorSession::new(&m, env0).map_err(DetectorError::Runtime)?;
        let verdict = if session.verdict().is_accepted() {
            session.verdict()
        } else if detector.fired() == Some(0) {
            Verdict::Rejected(0)
        } else {
            Verdict::NoVerdict
        };
        Ok(OptimalMonitor {
            session,
            detector,
            events: 0,
            verdict,
        })
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn detector(&self) -> &BadPrefixDetector {
        &self.detector
    }

    pub fn feed(&mut self, d: &DataValue) -> Result<Verdict, DetectorError> {
        self.events += 1;
        if self.verdict != Verdict::NoVerdict {
            return Ok(self.verdict);
        }
        self.session.feed(d).map_err(DetectorError::Runtime)?;
        self.detector.feed(d);
        if self.session.verdict().is_accepted() {
            self.verdict = self.session.verdict();
        } else if let Some(i) = self.detector.fired() {
            self.verdict = Verdict::Rejected(i);
        }
        Ok(self.verdict)
    }
}

/// Builds the violation-optimal detector for a disjunctive-fragment
/// formula (the acceptance side lives in [`OptimalMonitor`]).
pub fn optimal_violation_detector(f: &Formula) -> Result<BadPrefixDetector, DetectorError> {
    let report = classify(f);
    if !report.is_member(Fragment::DisjHmld) {
        let witness = report
            .status(Fragment::DisjHmld)
            .witness
            .clone()
            .unwrap_or_default();
        return Err(DetectorError::NotInFragment(witness));
    }
    let m = synthesize(f).map_err(DetectorError::Synthesis)?;
    let ra = monitor_to_ra(&m).map_err(DetectorError::Translate)?;
    BadPrefixDetector::from_nra(ra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn vals(s: &str) -> Vec<DataValue> {
        s.split(',').map(DataValue::new).collect()
    }

    #[test]
    fn first_two_equal_detector() {
        let f = parse_formula("exists x. <*=x><*=x> tt").unwrap();
        // differing first two values kill every continuation
        let mut om = OptimalMonitor::new(&f, &DataEnv::new()).unwrap();
        for d in vals("1,2") {
            om.feed(&d).unwrap();
        }
        assert_eq!(om.verdict(), Verdict::Rejected(2));
        // equal first two values accept
        let mut om = OptimalMonitor::new(&f, &DataEnv::new()).unwrap();
        for d in vals("1,1") {
            om.feed(&d).unwrap();
        }
        assert_eq!(om.verdict(), Verdict::Accepted(2));
    }

    #[test]
    fn leak_is_never_bad() {
        // any prefix extends to a repetition of its first value
        let f = parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap();
        let mut detector = optimal_violation_detector(&f).unwrap();
        assert_eq!(detector.fired(), None);
        for d in vals("1,2,3,4,5,6") {
            detector.feed(&d);
        }
        assert_eq!(detector.fired(), None);
    }

    #[test]
    fn unsatisfiable_diamond_is_bad_at_zero() {
        let f = parse_formula("<!true> tt").unwrap();
        let detector = optimal_violation_detector(&f).unwrap();
        assert_eq!(detector.fired(), Some(0));
    }

    #[test]
    fn rejects_conjunctive_formulas() {
        let f = parse_formula("tt & tt").unwrap();
        assert!(matches!(
            optimal_violation_detector(&f),
            Err(DetectorError::NotInFragment(_))
        ));
    }
}
