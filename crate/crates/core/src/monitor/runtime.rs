//! Small-step symbolic execution of monitors.
//!
//! A configuration is a binary ⊕/⊗ tree whose leaves carry a monitor, a
//! symbolic environment and a constraint store. Guessing binds a fresh
//! unconstrained symbol; guard evaluation case-splits on the undetermined
//! atoms, with each consistent split refining the store. Forked siblings
//! share the symbols guessed before the fork, so when a yes verdict
//! collapses a ⊗ node its accumulated constraints are conjoined into the
//! surviving side (a leaf whose store becomes unsatisfiable turns into
//! end); dropping them would accept joint runs that no single choice of
//! guessed values can realize.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataEnv, DataTerm, DataValue, DataVar};
use crate::monitor::store::{ConstraintStore, SymValue};
use crate::monitor::term::{subst_rec_monitor, tau_divergent, Monitor};

/// Verdict of a run. Monitors raise only `Accepted`; the violation wrapper
/// and the optimal detector reuse the same type with `Rejected`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Accepted(usize),
    Rejected(usize),
    NoVerdict,
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted(i) => write!(f, "accepted at {i}"),
            Verdict::Rejected(i) => write!(f, "rejected at {i}"),
            Verdict::NoVerdict => f.write_str("no verdict"),
        }
    }
}

pub type SymbolicEnv = BTreeMap<DataVar, SymValue>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfigLeaf {
    pub mon: Monitor,
    pub env: SymbolicEnv,
    pub store: ConstraintStore,
}

/// Binary parallel tree of monitor instances.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CTree {
    Leaf(ConfigLeaf),
    Or(Box<CTree>, Box<CTree>),
    And(Box<CTree>, Box<CTree>),
}

impl CTree {
    pub fn leaf_count(&self) -> usize {
        match self {
            CTree::Leaf(_) => 1,
            CTree::Or(l, r) | CTree::And(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    fn is_yes_leaf(&self) -> bool {
        matches!(self, CTree::Leaf(ConfigLeaf { mon: Monitor::Yes, .. }))
    }

    fn is_end_leaf(&self) -> bool {
        matches!(self, CTree::Leaf(ConfigLeaf { mon: Monitor::End, .. }))
    }
}

/// A runtime configuration: the parallel tree plus the next fresh symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Config {
    pub tree: CTree,
    pub next_sym: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuntimeError {
    TauDivergence(String),
    FreeRecVar(String),
    UnboundVar(String),
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeError::TauDivergence(s) => write!(f, "τ-divergent (unguarded) recursion: {s}"),
            RuntimeError::FreeRecVar(s) => write!(f, "free recursion variable `{s}` at runtime"),
            RuntimeError::UnboundVar(s) => write!(f, "guard reads unbound data variable `{s}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RuntimeError {}

// One applicable τ-rewrite, addressed by a path of 0/1 child steps.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Rule {
    UnfoldRec,
    BindGuess,
    Fork,
    OrYes(u8),
    OrEnd(u8),
    AndYes(u8),
    AndEnd(u8),
}

fn rule_priority(r: &Rule) -> u8 {
    // mRec before mFork before the verdict and collapse rules
    match r {
        Rule::UnfoldRec | Rule::BindGuess => 0,
        Rule::Fork => 1,
        _ => 2,
    }
}

fn collect_rewrites(tree: &CTree, path: &mut Vec<u8>, out: &mut Vec<(Vec<u8>, Rule)>) {
    match tree {
        CTree::Leaf(leaf) => match leaf.mon {
            Monitor::Rec(_, _) => out.push((path.clone(), Rule::UnfoldRec)),
            Monitor::Guess(_, _) => out.push((path.clone(), Rule::BindGuess)),
            Monitor::ParOr(_, _) | Monitor::ParAnd(_, _) => out.push((path.clone(), Rule::Fork)),
            _ => {}
        },
        CTree::Or(l, r) => {
            for (i, c) in [&**l, &**r].into_iter().enumerate() {
                if c.is_yes_leaf() {
                    out.push((path.clone(), Rule::OrYes(i as u8)));
                }
                if c.is_end_leaf() {
                    out.push((path.clone(), Rule::OrEnd(i as u8)));
                }
            }
            path.push(0);
            collect_rewrites(l, path, out);
            path.pop();
            path.push(1);
            collect_rewrites(r, path, out);
            path.pop();
        }
        CTree::And(l, r) => {
            for (i, c) in [&**l, &**r].into_iter().enumerate() {
                if c.is_yes_leaf() {
                    out.push((path.clone(), Rule::AndYes(i as u8)));
                }
                if c.is_end_leaf() {
                    out.push((path.clone(), Rule::AndEnd(i as u8)));
                }
            }
            path.push(0);
            collect_rewrites(l, path, out);
            path.pop();
            path.push(1);
            collect_rewrites(r, path, out);
            path.pop();
        }
    }
}

// conjoins a store into every leaf; leaves that become unsatisfiable end
fn conjoin(tree: &CTree, store: &ConstraintStore) -> CTree {
    match tree {
        CTree::Leaf(leaf) => match leaf.store.merged_with(store) {
            Ok(merged) => CTree::Leaf(ConfigLeaf {
                mon: leaf.mon.clone(),
                env: leaf.env.clone(),
                store: merged,
            }),
            Err(_) => CTree::Leaf(ConfigLeaf {
                mon: Monitor::End,
                env: leaf.env.clone(),
                store: leaf.store.clone(),
            }),
        },
        CTree::Or(l, r) => CTree::Or(
            Box::new(conjoin(l, store)),
            Box::new(conjoin(r, store)),
        ),
        CTree::And(l, r) => CTree::And(
            Box::new(conjoin(l, store)),
            Box::new(conjoin(r, store)),
        ),
    }
}

fn apply_rewrite(
    tree: &CTree,
    path: &[u8],
    rule: &Rule,
    next_sym: &mut u32,
) -> Result<CTree, RuntimeError> {
    if let Some((&step, rest)) = path.split_first() {
        match tree {
            CTree::Or(l, r) | CTree::And(l, r) => {
                let (l, r) = if step == 0 {
                    (apply_rewrite(l, rest, rule, next_sym)?, (**r).clone())
                } else {
                    ((**l).clone(), apply_rewrite(r, rest, rule, next_sym)?)
                };
                Ok(match tree {
                    CTree::Or(_, _) => CTree::Or(Box::new(l), Box::new(r)),
                    _ => CTree::And(Box::new(l), Box::new(r)),
                })
            }
            CTree::Leaf(_) => unreachable!("path into a leaf"),
        }
    } else {
        match (tree, rule) {
            (CTree::Leaf(leaf), Rule::UnfoldRec) => {
                let (x, body) = match &leaf.mon {
                    Monitor::Rec(x, body) => (x.clone(), (**body).clone()),
                    _ => unreachable!(),
                };
                let unfolded = subst_rec_monitor(&body, &x, &leaf.mon);
                Ok(CTree::Leaf(ConfigLeaf {
                    mon: unfolded,
                    env: leaf.env.clone(),
                    store: leaf.store.clone(),
                }))
            }
            (CTree::Leaf(leaf), Rule::BindGuess) => {
                let (x, body) = match &leaf.mon {
                    Monitor::Guess(x, body) => (x.clone(), (**body).clone()),
                    _ => unreachable!(),
                };
                let sym = *next_sym;
                *next_sym += 1;
                let mut env = leaf.env.clone();
                env.insert(x, SymValue::Symbol(sym));
                Ok(CTree::Leaf(ConfigLeaf {
                    mon: body,
                    env,
                    store: leaf.store.clone(),
                }))
            }
            (CTree::Leaf(leaf), Rule::Fork) => {
                let (l, r, conj) = match &leaf.mon {
                    Monitor::ParOr(l, r) => ((**l).clone(), (**r).clone(), false),
                    Monitor::ParAnd(l, r) => ((**l).clone(), (**r).clone(), true),
                    _ => unreachable!(),
                };
                let mk = |m: Monitor| {
                    Box::new(CTree::Leaf(ConfigLeaf {
                        mon: m,
                        env: leaf.env.clone(),
                        store: leaf.store.clone(),
                    }))
                };
                Ok(if conj {
                    CTree::And(mk(l), mk(r))
                } else {
                    CTree::Or(mk(l), mk(r))
                })
            }
            (CTree::Or(l, r), Rule::OrYes(side)) => {
                Ok(if *side == 0 { (**l).clone() } else { (**r).clone() })
            }
            (CTree::Or(l, r), Rule::OrEnd(side)) => {
                Ok(if *side == 0 { (**r).clone() } else { (**l).clone() })
            }
            (CTree::And(l, r), Rule::AndYes(side)) => {
                let (yes, other) = if *side == 0 { (l, r) } else { (r, l) };
                let store = match &**yes {
                    CTree::Leaf(leaf) => leaf.store.clone(),
                    _ => unreachable!(),
                };
                Ok(conjoin(other, &store))
            }
            (CTree::And(l, r), Rule::AndEnd(side)) => {
                let end = if *side == 0 { l } else { r };
                Ok((**end).clone())
            }
            _ => unreachable!("rule does not match node"),
        }
    }
}

const TAU_STEP_CAP: usize = 200_000;

// validates no free recursion variables sit at leaves
fn check_leaves(tree: &CTree) -> Result<(), RuntimeError> {
    match tree {
        CTree::Leaf(leaf) => {
            if let Monitor::Var(x) = &leaf.mon {
                Err(RuntimeError::FreeRecVar(x.as_str().to_string()))
            } else {
                Ok(())
            }
        }
        CTree::Or(l, r) | CTree::And(l, r) => {
            check_leaves(l)?;
            check_leaves(r)
        }
    }
}

pub(crate) fn tau_closure_config_with(
    config: &Config,
    mut pick: impl FnMut(usize) -> usize,
) -> Result<Config, RuntimeError> {
    let mut tree = config.tree.clone();
    let mut next_sym = config.next_sym;
    for _ in 0..TAU_STEP_CAP {
        check_leaves(&tree)?;
        let mut rewrites = Vec::new();
        collect_rewrites(&tree, &mut Vec::new(), &mut rewrites);
        if rewrites.is_empty() {
            return Ok(Config { tree, next_sym });
        }
        rewrites.sort_by(|a, b| {
            rule_priority(&a.1)
                .cmp(&rule_priority(&b.1))
                .then_with(|| a.cmp(b))
        });
        let chosen = pick(rewrites.len()).min(rewrites.len() - 1);
        let (path, rule) = &rewrites[chosen];
        tree = apply_rewrite(&tree, path, rule, &mut next_sym)?;
    }
    Err(RuntimeError::TauDivergence(
        "τ-rewriting did not terminate".to_string(),
    ))
}

/// Exhaustively applies the internal rules (recursion unfolding, guessing,
/// forking, verdict collapse and garbage collection) to one configuration.
pub fn tau_closure_config(config: &Config) -> Result<Config, RuntimeError> {
    tau_closure_config_with(config, |_| 0)
}

// renames symbols in traversal order and sorts/dedups parallel siblings,
// producing a canonical configuration
fn canonicalize(config: &Config) -> Config {
    fn flatten(tree: &CTree, or: bool, out: &mut Vec<CTree>) {
        match (tree, or) {
            (CTree::Or(l, r), true) => {
                flatten(l, true, out);
                flatten(r, true, out);
            }
            (CTree::And(l, r), false) => {
                flatten(l, false, out);
                flatten(r, false, out);
            }
            _ => out.push(normal(tree)),
        }
    }
    fn normal(tree: &CTree) -> CTree {
        match tree {
            CTree::Leaf(_) => tree.clone(),
            CTree::Or(_, _) => {
                let mut parts = Vec::new();
                flatten(tree, true, &mut parts);
                parts.sort();
                parts.dedup();
                rebuild(parts, true)
            }
            CTree::And(_, _) => {
                let mut parts = Vec::new();
                flatten(tree, false, &mut parts);
                parts.sort();
                parts.dedup();
                rebuild(parts, false)
            }
        }
    }
    fn rebuild(mut parts: Vec<CTree>, or: bool) -> CTree {
        let mut acc = parts.pop().expect("nonempty");
        while let Some(p) = parts.pop() {
            acc = if or {
                CTree::Or(Box::new(p), Box::new(acc))
            } else {
                CTree::And(Box::new(p), Box::new(acc))
            };
        }
        acc
    }
    fn visit_symbols(tree: &CTree, map: &mut BTreeMap<u32, u32>) {
        match tree {
            CTree::Leaf(leaf) => {
                for v in leaf.env.values() {
                    if let SymValue::Symbol(s) = v {
                        let n = map.len() as u32;
                        map.entry(*s).or_insert(n);
                    }
                }
                for s in leaf.store.symbols() {
                    let n = map.len() as u32;
                    map.entry(s).or_insert(n);
                }
            }
            CTree::Or(l, r) | CTree::And(l, r) => {
                visit_symbols(l, map);
                visit_symbols(r, map);
            }
        }
    }
    fn rename(tree: &CTree, map: &BTreeMap<u32, u32>) -> CTree {
        match tree {
            CTree::Leaf(leaf) => CTree::Leaf(ConfigLeaf {
                mon: leaf.mon.clone(),
                env: leaf
                    .env
                    .iter()
                    .map(|(k, v)| {
                        let v = match v {
                            SymValue::Symbol(s) => SymValue::Symbol(map[s]),
                            c => c.clone(),
                        };
                        (k.clone(), v)
                    })
                    .collect(),
                store: leaf.store.renamed(map),
            }),
            CTree::Or(l, r) => CTree::Or(Box::new(rename(l, map)), Box::new(rename(r, map))),
            CTree::And(l, r) => CTree::And(Box::new(rename(l, map)), Box::new(rename(r, map))),
        }
    }
    let sorted = normal(&config.tree);
    let mut map = BTreeMap::new();
    visit_symbols(&sorted, &mut map);
    let next = map.len() as u32;
    Config {
        tree: rename(&sorted, &map),
        next_sym: next,
    }
}

// enumerates the consistent truth assignments to the guard's atoms and the
// resulting successor leaves (mAct when the guard holds, mBlc otherwise)
fn step_guard_leaf(leaf: &ConfigLeaf, d: &DataValue) -> Result<Vec<ConfigLeaf>, RuntimeError> {
    let (b, cont) = match &leaf.mon {
        Monitor::Guard(b, m) => (b.clone(), (**m).clone()),
        _ => unreachable!(),
    };
    let lookup = |t: &DataTerm| -> Result<SymValue, RuntimeError> {
        match t {
            DataTerm::Star => Ok(SymValue::Concrete(d.clone())),
            DataTerm::Var(x) => leaf
                .env
                .get(x)
                .cloned()
                .ok_or_else(|| RuntimeError::UnboundVar(x.as_str().to_string())),
        }
    };
    // distinct atoms, in syntactic order
    let mut atoms: Vec<(SymValue, SymValue)> = Vec::new();
    fn collect_atoms(
        b: &BExpr,
        lookup: &impl Fn(&DataTerm) -> Result<SymValue, RuntimeError>,
        out: &mut Vec<(SymValue, SymValue)>,
    ) -> Result<(), RuntimeError> {
        match b {
            BExpr::True => Ok(()),
            BExpr::Eq(l, r) => {
                let pair = (lookup(l)?, lookup(r)?);
                if !out.contains(&pair) {
                    out.push(pair);
                }
                Ok(())
            }
            BExpr::Not(inner) => collect_atoms(inner, lookup, out),
            BExpr::And(l, r) => {
                collect_atoms(l, lookup, out)?;
                collect_atoms(r, lookup, out)
            }
        }
    }
    collect_atoms(&b, &lookup, &mut atoms)?;

    // depth-first enumeration of consistent splits
    let mut results = Vec::new();
    let mut stack = alloc::vec![(leaf.store.clone(), Vec::<bool>::new())];
    while let Some((store, values)) = stack.pop() {
        if values.len() == atoms.len() {
            let assignment: BTreeMap<(SymValue, SymValue), bool> = atoms
                .iter()
                .cloned()
                .zip(values.iter().copied())
                .collect();
            fn eval(
                b: &BExpr,
                lookup: &impl Fn(&DataTerm) -> Result<SymValue, RuntimeError>,
                assignment: &BTreeMap<(SymValue, SymValue), bool>,
            ) -> bool {
                match b {
                    BExpr::True => true,
                    BExpr::Eq(l, r) => {
                        let pair = (lookup(l).unwrap(), lookup(r).unwrap());
                        assignment[&pair]
                    }
                    BExpr::Not(inner) => !eval(inner, lookup, assignment),
                    BExpr::And(l, r) => {
                        eval(l, lookup, assignment) && eval(r, lookup, assignment)
                    }
                }
            }
            let holds = eval(&b, &lookup, &assignment);
            results.push(ConfigLeaf {
                mon: if holds { cont.clone() } else { Monitor::End },
                env: leaf.env.clone(),
                store,
            });
            continue;
        }
        let (a, b2) = &atoms[values.len()];
        match store.entailed(a, b2) {
            Some(t) => {
                let mut vs = values.clone();
                vs.push(t);
                stack.push((store, vs));
            }
            None => {
                // unsatisfiable refinements are pruned silently
                if let Ok(s_eq) = store.with_eq(a, b2) {
                    let mut vs = values.clone();
                    vs.push(true);
                    stack.push((s_eq, vs));
                }
                if let Ok(s_neq) = store.with_neq(a, b2) {
                    let mut vs = values.clone();
                    vs.push(false);
                    stack.push((s_neq, vs));
                }
            }
        }
    }
    Ok(results)
}

fn step_tree(tree: &CTree, d: &DataValue) -> Result<CTree, RuntimeError> {
    match tree {
        CTree::Leaf(leaf) => match &leaf.mon {
            Monitor::Yes | Monitor::End => Ok(tree.clone()), // mVrd self-loop
            Monitor::Guard(_, _) => {
                let mut successors = step_guard_leaf(leaf, d)?;
                let mut acc = CTree::Leaf(successors.pop().expect("at least one split"));
                while let Some(l) = successors.pop() {
                    acc = CTree::Or(Box::new(CTree::Leaf(l)), Box::new(acc));
                }
                Ok(acc)
            }
            other => unreachable!("leaf not τ-normal before step: {other:?}"),
        },
        CTree::Or(l, r) => Ok(CTree::Or(
            Box::new(step_tree(l, d)?),
            Box::new(step_tree(r, d)?),
        )),
        CTree::And(l, r) => Ok(CTree::And(
            Box::new(step_tree(l, d)?),
            Box::new(step_tree(r, d)?),
        )),
    }
}

/// Applies the internal rules exhaustively to a set of configurations and
/// canonicalizes (symbol renaming, sibling sorting and deduplication).
pub fn tau_closure(configs: &[Config]) -> Result<Vec<Config>, RuntimeError> {
    let mut out = Vec::new();
    for c in configs {
        let closed = tau_closure_config(c)?;
        let canon = canonicalize(&closed);
        if !out.contains(&canon) {
            out.push(canon);
        }
    }
    Ok(out)
}

/// Processes one trace event synchronously across every parallel
/// component, then normalizes. Configurations that can no longer accept
/// (a lone end leaf) are dropped.
pub fn step(configs: &[Config], d: &DataValue) -> Result<Vec<Config>, RuntimeError> {
    let mut out = Vec::new();
    for c in configs {
        let stepped = Config {
            tree: step_tree(&c.tree, d)?,
            next_sym: c.next_sym,
        };
        let closed = tau_closure_config(&stepped)?;
        let canon = canonicalize(&closed);
        if canon.tree.is_end_leaf() {
            continue;
        }
        if !out.contains(&canon) {
            out.push(canon);
        }
    }
    Ok(out)
}

/// Outcome of a complete run: the verdict plus the peak leaf count across
/// all configurations (the runtime's memory high-water mark).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub peak_leaves: usize,
}

fn accepted(configs: &[Config]) -> bool {
    configs.iter().any(|c| c.tree.is_yes_leaf())
}

fn total_leaves(configs: &[Config]) -> usize {
    configs.iter().map(|c| c.tree.leaf_count()).sum()
}

/// A stateful monitor run that events can be fed into one at a time.
#[derive(Clone, Debug)]
pub struct MonitorSession {
    configs: Vec<Config>,
    verdict: Verdict,
    events: usize,
    peak_leaves: usize,
    /// reinterpret acceptance as rejection (violation monitoring)
    flip: bool,
}

impl MonitorSession {
    pub fn new(m: &Monitor, env0: &DataEnv) -> Result<Self, RuntimeError> {
        Self::with_flip(m, env0, false)
    }

    pub(crate) fn with_flip(m: &Monitor, env0: &DataEnv, flip: bool) -> Result<Self, RuntimeError> {
        if let Some(x) = m.free_rec_vars().iter().next() {
            return Err(RuntimeError::FreeRecVar(x.as_str().to_string()));
        }
        if let Some(x) = tau_divergent(m) {
            return Err(RuntimeError::TauDivergence(alloc::format!(
                "recursion variable `{x}` can unfold to itself without reading an event"
            )));
        }
        let env: SymbolicEnv = env0
            .iter()
            .map(|(k, v)| (k.clone(), SymValue::Concrete(v.clone())))
            .collect();
        let init = Config {
            tree: CTree::Leaf(ConfigLeaf {
                mon: m.clone(),
                env,
                store: ConstraintStore::new(),
            }),
            next_sym: 0,
        };
        let configs = tau_closure(&[init])?;
        let mut session = MonitorSession {
            verdict: if accepted(&configs) {
                if flip {
                    Verdict::Rejected(0)
                } else {
                    Verdict::Accepted(0)
                }
            } else {
                Verdict::NoVerdict
            },
            peak_leaves: total_leaves(&configs),
            configs,
            events: 0,
            flip,
        };
        session.peak_leaves = session.peak_leaves.max(1);
        Ok(session)
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn peak_leaves(&self) -> usize {
        self.peak_leaves
    }

    pub fn events(&self) -> usize {
        self.events
    }

    pub fn config_count(&self) -> usize {
        self.configs.len()
    }

    /// Whether any future event could still produce a verdict.
    pub fn can_progress(&self) -> bool {
        self.verdict == Verdict::NoVerdict && !self.configs.is_empty()
    }

    /// Canonical fingerprint of the live configurations, used to detect
    /// stabilization when pumping a lasso loop.
    pub fn fingerprint(&self) -> Vec<Config> {
        self.configs.clone()
    }

    pub fn feed(&mut self, d: &DataValue) -> Result<Verdict, RuntimeError> {
        self.events += 1;
        if self.verdict != Verdict::NoVerdict {
            return Ok(self.verdict); // irrevocable
        }
        self.configs = step(&self.configs, d)?;
        self.peak_leaves = self.peak_leaves.max(total_leaves(&self.configs));
        if accepted(&self.configs) {
            self.verdict = if self.flip {
                Verdict::Rejected(self.events)
            } else {
                Verdict::Accepted(self.events)
            };
        }
        Ok(self.verdict)
    }
}

/// Runs a closed, τ-convergent monitor over a finite trace under an
/// initial environment. Returns `Accepted(i)` for the smallest prefix
/// length `i` at which a configuration reduces to a lone yes.
pub fn run_with_env(
    m: &Monitor,
    env0: &DataEnv,
    w: &[DataValue],
) -> Result<RunOutcome, RuntimeError> {
    let mut session = MonitorSession::new(m, env0)?;
    for d in w {
        if session.verdict() != Verdict::NoVerdict {
            break;
        }
        session.feed(d)?;
    }
    Ok(RunOutcome {
        verdict: session.verdict(),
        peak_leaves: session.peak_leaves(),
    })
}

/// [`run_with_env`] with an empty initial environment.
pub fn run(m: &Monitor, w: &[DataValue]) -> Result<RunOutcome, RuntimeError> {
    run_with_env(m, &DataEnv::new(), w)
}

impl MonitorSession {
    /// A streaming violation monitor for a safety-fragment formula:
    /// the dual formula's monitor with acceptance flipped to rejection.
    pub fn for_violation(
        f: &crate::ast::Formula,
        env0: &DataEnv,
    ) -> Result<MonitorSession, ViolationError> {
        let report = crate::fragments::classify(f);
        if !report.is_member(crate::fragments::Fragment::SHmld) {
            let witness = report
                .status(crate::fragments::Fragment::SHmld)
                .witness
                .clone()
                .unwrap_or_default();
            return Err(ViolationError::NotInFragment(witness));
        }
        let dual = crate::norm::dualize(f);
        let m = crate::monitor::synthesize(&dual).map_err(ViolationError::Synthesis)?;
        MonitorSession::with_flip(&m, env0, true).map_err(ViolationError::Runtime)
    }
}

/// Monitors a safety-fragment formula for violations: synthesizes the
/// monitor of the dual formula and reinterprets acceptance as rejection.
pub fn run_violation(
    f: &crate::ast::Formula,
    env0: &DataEnv,
    w: &[DataValue],
) -> Result<RunOutcome, ViolationError> {
    let report = crate::fragments::classify(f);
    if !report.is_member(crate::fragments::Fragment::SHmld) {
        let witness = report
            .status(crate::fragments::Fragment::SHmld)
            .witness
            .clone()
            .unwrap_or_default();
        return Err(ViolationError::NotInFragment(witness));
    }
    let dual = crate::norm::dualize(f);
    let m = crate::monitor::synthesize(&dual).map_err(ViolationError::Synthesis)?;
    let mut session =
        MonitorSession::with_flip(&m, env0, true).map_err(ViolationError::Runtime)?;
    for d in w {
        if session.verdict() != Verdict::NoVerdict {
            break;
        }
        session.feed(d).map_err(ViolationError::Runtime)?;
    }
    Ok(RunOutcome {
        verdict: session.verdict(),
        peak_leaves: session.peak_leaves(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationError {
    NotInFragment(crate::ast::Path),
    Synthesis(crate::monitor::SynthesisError),
    Runtime(RuntimeError),
}

impl fmt::Display for ViolationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationError::NotInFragment(p) => write!(
                f,
                "violation monitoring requires a sHMLd formula; offending node at {}",
                crate::ast::path_string(p)
            ),
            ViolationError::Synthesis(e) => e.fmt(f),
            ViolationError::Runtime(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ViolationError {}

/// Differential variant of the τ-closure that applies applicable rewrites
/// in an arbitrary (seeded) order; used to check confluence.
#[doc(hidden)]
pub fn tau_closure_shuffled(config: &Config, seed: u64) -> Result<Config, RuntimeError> {
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    let closed = tau_closure_config_with(config, move |n| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state as usize) % n.max(1)
    })?;
    Ok(canonicalize(&closed))
}

#[doc(hidden)]
pub fn canonical_config(config: &Config) -> Config {
    canonicalize(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::term::{parse_monitor, synthesize};
    use crate::parse::parse_formula;

    fn trace(s: &str) -> Vec<DataValue> {
        s.split(',').map(DataValue::new).collect()
    }

    fn m_leak() -> Monitor {
        synthesize(&parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap()).unwrap()
    }

    #[test]
    fn leak_accepts_token_replay() {
        let out = run(&m_leak(), &trace("1,0,1")).unwrap();
        assert_eq!(out.verdict, Verdict::Accepted(3));
    }

    #[test]
    fn leak_gives_no_verdict_without_repetition() {
        let out = run(&m_leak(), &trace("1,0,2")).unwrap();
        assert_eq!(out.verdict, Verdict::NoVerdict);
        let out = run(&m_leak(), &trace("1,0,2,3,4")).unwrap();
        assert_eq!(out.verdict, Verdict::NoVerdict);
    }

    #[test]
    fn yes_accepts_the_empty_trace() {
        let out = run(&Monitor::Yes, &[]).unwrap();
        assert_eq!(out.verdict, Verdict::Accepted(0));
    }

    #[test]
    fn verdicts_are_irrevocable() {
        let mut session = MonitorSession::new(&m_leak(), &DataEnv::new()).unwrap();
        for d in trace("1,0,1,9,8,7") {
            session.feed(&d).unwrap();
        }
        assert_eq!(session.verdict(), Verdict::Accepted(3));
    }

    #[test]
    fn conjunction_requires_consistent_shared_guesses() {
        // guess x then require the first event to both equal and differ
        // from x: no single guessed value realizes both sides
        let m = parse_monitor("guess x. ((x=*). yes & (x!=*). yes)").unwrap();
        let out = run(&m, &trace("1,2,3")).unwrap();
        assert_eq!(out.verdict, Verdict::NoVerdict);
        // the disjunctive version accepts immediately
        let m = parse_monitor("guess x. ((x=*). yes | (x!=*). yes)").unwrap();
        let out = run(&m, &trace("1")).unwrap();
        assert_eq!(out.verdict, Verdict::Accepted(1));
    }

    #[test]
    fn conjunction_with_joint_witness_accepts() {
        // x must match events one and two: only possible when they repeat
        let m = parse_monitor("guess x. ((x=*). yes & (true). (x=*). yes)").unwrap();
        assert_eq!(run(&m, &trace("5,5")).unwrap().verdict, Verdict::Accepted(2));
        assert_eq!(run(&m, &trace("5,6")).unwrap().verdict, Verdict::NoVerdict);
    }

    #[test]
    fn divergent_monitor_is_a_hard_error() {
        let m = parse_monitor("rec X. X | (true). X").unwrap();
        assert!(matches!(
            run(&m, &trace("1")),
            Err(RuntimeError::TauDivergence(_))
        ));
    }

    #[test]
    fn violation_monitoring_of_the_leak_dual() {
        let dual_leak = parse_formula("forall x. [x=*] max X. [x=*] ff & [x!=*] X").unwrap();
        let out = run_violation(&dual_leak, &DataEnv::new(), &trace("1,0,1")).unwrap();
        assert_eq!(out.verdict, Verdict::Rejected(3));
        let out = run_violation(&dual_leak, &DataEnv::new(), &trace("1,0,2")).unwrap();
        assert_eq!(out.verdict, Verdict::NoVerdict);
    }

    #[test]
    fn ff_as_trivial_safety_formula() {
        // dual of ff is tt whose monitor accepts immediately: rejected at 0
        let out = run_violation(&crate::ast::Formula::Ff, &DataEnv::new(), &[]).unwrap();
        assert_eq!(out.verdict, Verdict::Rejected(0));
    }

    #[test]
    fn shuffled_closure_is_confluent_on_leak() {
        let init = Config {
            tree: CTree::Leaf(ConfigLeaf {
                mon: m_leak(),
                env: SymbolicEnv::new(),
                store: ConstraintStore::new(),
            }),
            next_sym: 0,
        };
        let reference = canonical_config(&tau_closure_config(&init).unwrap());
        for seed in 0..20 {
            let shuffled = tau_closure_shuffled(&init, seed).unwrap();
            assert_eq!(shuffled, reference, "seed {seed}");
        }
    }

    #[test]
    fn mvrd2_collapses_or_with_yes() {
        let m = parse_monitor("yes | guess x. (x=*). yes").unwrap();
        let out = run(&m, &[]).unwrap();
        assert_eq!(out.verdict, Verdict::Accepted(0));
    }
}
