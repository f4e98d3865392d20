//! Guarded-branching annotations for the guarded fragment, and the
//! good-prefix checker built on them.
//!
//! At a guarded universal quantifier the infinite branching is replaced by
//! a finite witness set D plus one representative value d* outside it: the
//! guard instance at d* must have an annotation whose trace accesses all
//! fall inside D, every d in D must satisfy the body or the guard, and the
//! ambient environment's values must lie in D. Values never accessed are
//! interchangeable with d*, which is what makes the finite check sound.
//!
//! [`good_prefix_guarded`] runs the same search against a finite prefix
//! w: positions strictly inside w behave normally, and one synthetic
//! boundary position stands for the unknown future. Only non-consuming
//! nodes may sit at the boundary, so an annotation found this way is
//! valid for every infinite extension of w, i.e. w is a good prefix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{eval_bexpr, DataEnv, DataValue, Formula};
use crate::budget::Budget;
use crate::fragments::{check_guarded_root, ExistsSplit, GuardedDerivation};
use crate::oracle::annotation::{AnnCheckResult, AnnError, AnnNode, Annotation};
use crate::oracle::{quant_domain, SubId, SubTable, TableError};
use crate::trace::{fresh_values, LassoTrace};

/// Witness carried by a guarded universal node: the finite set D of values
/// that are checked explicitly, and the representative d* ∉ D standing for
/// every other value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GForallWitness {
    pub d_set: Vec<DataValue>,
    pub d_star: DataValue,
}

/// An annotation over a guarded-fragment formula, together with the
/// witness of every guarded universal node (keyed by node index).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GuardedAnnotation {
    pub annotation: Annotation,
    pub witnesses: BTreeMap<usize, GForallWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardedAnnError {
    Ann(AnnError),
    NotGuarded(String),
}

impl fmt::Display for GuardedAnnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardedAnnError::Ann(e) => e.fmt(f),
            GuardedAnnError::NotGuarded(s) => write!(f, "not in the guarded fragment: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GuardedAnnError {}

impl From<AnnError> for GuardedAnnError {
    fn from(e: AnnError) -> Self {
        GuardedAnnError::Ann(e)
    }
}

// paths of subterms that are consumed by the ∃-split pattern and therefore
// are not grammar positions of their own
fn scaffold_ids(table: &SubTable, deriv: &GuardedDerivation) -> BTreeSet<SubId> {
    let mut by_path: BTreeMap<&[crate::ast::Step], SubId> = BTreeMap::new();
    for id in 0..table.len() {
        by_path.insert(table.item(id).path.as_slice(), id);
    }
    let mut scaffold = BTreeSet::new();
    for (path, split) in &deriv.exists_splits {
        if split.seen_branch.is_none() {
            continue;
        }
        // the Or node, both And nodes, and the whole x≠V / x∼V subtrees
        let mut or_path = path.clone();
        or_path.push(crate::ast::Step::Body);
        if let Some(&or_id) = by_path.get(or_path.as_slice()) {
            scaffold.insert(or_id);
            for &and_id in table.children(or_id) {
                scaffold.insert(and_id);
                // left child of each And is the comparison formula
                let cmp = table.children(and_id)[0];
                let mut stack = alloc::vec![cmp];
                while let Some(id) = stack.pop() {
                    scaffold.insert(id);
                    stack.extend_from_slice(table.children(id));
                }
            }
        }
    }
    scaffold
}

/// Verifies a guarded-branching annotation against a lasso trace: the
/// standard clauses, the modified quantifier clauses and the witness
/// conditions at every guarded universal node.
pub fn check_guarded_annotation(
    f: &Formula,
    env0: &DataEnv,
    t: &LassoTrace,
    ga: &GuardedAnnotation,
) -> Result<AnnCheckResult, GuardedAnnError> {
    let check = check_guarded_root(f);
    if !check.accepted {
        return Err(GuardedAnnError::NotGuarded(
            check
                .rejection
                .map(|r| r.to_string())
                .unwrap_or_else(|| "rejected".into()),
        ));
    }
    let deriv = check.derivation;
    let table = SubTable::build(f).map_err(AnnError::Table)?;
    let ann = &ga.annotation;
    let invalid = |s: String| Ok(AnnCheckResult::Invalid(s));

    for (i, n) in ann.nodes.iter().enumerate() {
        if n.term >= table.len() {
            return Err(AnnError::BadNodeRef(format!("node {i} subterm out of range")).into());
        }
        if n.pos >= t.len() {
            return Err(AnnError::BadNodeRef(format!("node {i} position out of range")).into());
        }
    }
    for &(a, b) in &ann.edges {
        if a >= ann.nodes.len() || b >= ann.nodes.len() {
            return Err(AnnError::BadNodeRef(format!("edge ({a}, {b}) out of range")).into());
        }
    }
    let triples: BTreeSet<(SubId, DataEnv, usize)> = ann.node_set();
    if triples.len() != ann.nodes.len() {
        return invalid("duplicate annotation nodes".into());
    }
    if !triples.contains(&(table.root(), env0.clone(), 0)) {
        return invalid("the root triple (φ, δ, t) is missing".into());
    }

    let scaffold = scaffold_ids(&table, &deriv);
    let splits_by_id: BTreeMap<SubId, &ExistsSplit> = {
        let mut by_path: BTreeMap<&[crate::ast::Step], SubId> = BTreeMap::new();
        for id in 0..table.len() {
            by_path.insert(table.item(id).path.as_slice(), id);
        }
        deriv
            .exists_splits
            .iter()
            .filter_map(|(p, s)| by_path.get(p.as_slice()).map(|&id| (id, s)))
            .collect()
    };
    let id_by_path: BTreeMap<Vec<crate::ast::Step>, SubId> = (0..table.len())
        .map(|id| (table.item(id).path.clone(), id))
        .collect();

    let mut out_edges: Vec<Vec<usize>> = alloc::vec![Vec::new(); ann.nodes.len()];
    for &(a, b) in &ann.edges {
        out_edges[a].push(b);
    }

    for (i, n) in ann.nodes.iter().enumerate() {
        let formula = table.formula(n.term);
        let children = table.children(n.term);
        let targets: Vec<(usize, &AnnNode)> =
            out_edges[i].iter().map(|&j| (j, &ann.nodes[j])).collect();
        let here = |s: &str| format!("node {i} at position {}: {s}", n.pos);
        if scaffold.contains(&n.term) {
            return invalid(here("this subterm is part of an ∃-split pattern, not a node"));
        }
        match formula {
            Formula::Ff => return invalid(here("ff may not appear in an annotation")),
            Formula::Tt => {
                if !targets.is_empty() {
                    return invalid(here("tt licenses no outgoing edges"));
                }
            }
            Formula::Diamond(b, _) => {
                let d = t.value_at(n.pos).clone();
                match eval_bexpr(b, &n.env, &d) {
                    Ok(true) => {}
                    Ok(false) => return invalid(here("the diamond guard does not hold")),
                    Err(e) => return invalid(here(&format!("{e}"))),
                }
                let want = (children[0], n.env.clone(), t.succ(n.pos));
                let mut found = false;
                for (_, tgt) in &targets {
                    if (tgt.term, tgt.env.clone(), tgt.pos) == want {
                        found = true;
                    } else {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                }
                if !found {
                    return invalid(here("the required dependency edge is missing"));
                }
            }
            Formula::Or(_, _) | Formula::And(_, _) => {
                let conj = matches!(formula, Formula::And(_, _));
                let mut seen = [false, false];
                for (_, tgt) in &targets {
                    let which = if tgt.term == children[0] {
                        0
                    } else if tgt.term == children[1] {
                        1
                    } else {
                        return invalid(here("an edge leads to an unlicensed target"));
                    };
                    if tgt.env != n.env || tgt.pos != n.pos {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    seen[which] = true;
                }
                if conj && !(seen[0] && seen[1]) {
                    return invalid(here("a conjunct dependency is missing"));
                }
                if !conj && !(seen[0] || seen[1]) {
                    return invalid(here("the disjunction has no chosen branch"));
                }
            }
            Formula::Min(_, _) => {
                let want = (children[0], n.env.clone(), n.pos);
                let mut found = false;
                for (_, tgt) in &targets {
                    if (tgt.term, tgt.env.clone(), tgt.pos) == want {
                        found = true;
                    } else {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                }
                if !found {
                    return invalid(here("the required dependency edge is missing"));
                }
            }
            Formula::Var(x) => {
                let binder = match table.binder(x) {
                    Some(b) => b,
                    None => return invalid(here("recursion variable has no binder")),
                };
                let body = table.body(binder);
                let mut found = false;
                for (_, tgt) in &targets {
                    let ok = (tgt.term == binder || tgt.term == body)
                        && tgt.env == n.env
                        && tgt.pos == n.pos;
                    if !ok {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    found = true;
                }
                if !found {
                    return invalid(here("the recursion unfolding edge is missing"));
                }
            }
            Formula::Exists(x, _) => {
                let split = match splits_by_id.get(&n.term) {
                    Some(s) => s,
                    None => return invalid(here("existential without a derivation entry")),
                };
                let mut compare_vals = BTreeSet::new();
                for y in &split.compare {
                    match n.env.get(y) {
                        Some(v) => {
                            compare_vals.insert(v.clone());
                        }
                        None => return invalid(here(&format!("unbound comparison variable `{y}`"))),
                    }
                }
                let phi1 = id_by_path[&split.fresh_branch];
                let phi2 = split.seen_branch.as_ref().map(|p| id_by_path[p]);
                let mut found = false;
                for (_, tgt) in &targets {
                    let d = match tgt.env.get(x) {
                        Some(d) => d.clone(),
                        None => return invalid(here("witness edge does not bind the variable")),
                    };
                    if tgt.env != n.env.bind(x, &d) || tgt.pos != n.pos {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    let licensed = if compare_vals.contains(&d) {
                        phi2 == Some(tgt.term)
                    } else {
                        tgt.term == phi1
                    };
                    if !licensed {
                        return invalid(here("the ∃-split routes this witness to the other branch"));
                    }
                    found = true;
                }
                if !found {
                    return invalid(here("the existential witness edge is missing"));
                }
            }
            Formula::GForall { var, .. } => {
                let witness = match ga.witnesses.get(&i) {
                    Some(w) => w,
                    None => return invalid(here("guarded universal node has no (D, d*) witness")),
                };
                let d_set: BTreeSet<DataValue> = witness.d_set.iter().cloned().collect();
                if d_set.contains(&witness.d_star) {
                    return invalid(here("d* must lie outside D"));
                }
                for v in n.env.values() {
                    if !d_set.contains(v) {
                        return invalid(here(&format!(
                            "environment value `{v}` is missing from D"
                        )));
                    }
                }
                let guard_id = children[0];
                let body_id = children[1];
                let star_goal = (guard_id, n.env.bind(var, &witness.d_star), n.pos);
                let mut star_edge: Option<usize> = None;
                for (j, tgt) in &targets {
                    let d = match tgt.env.get(var) {
                        Some(d) => d.clone(),
                        None => return invalid(here("witness edge does not bind the variable")),
                    };
                    if tgt.env != n.env.bind(var, &d) || tgt.pos != n.pos {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    let licensed = if d == witness.d_star {
                        tgt.term == guard_id
                    } else {
                        d_set.contains(&d) && (tgt.term == guard_id || tgt.term == body_id)
                    };
                    if !licensed {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    if (tgt.term, tgt.env.clone(), tgt.pos) == star_goal {
                        star_edge = Some(*j);
                    }
                }
                let star_edge = match star_edge {
                    Some(j) => j,
                    None => return invalid(here("the d* guard instance is missing")),
                };
                for d in &d_set {
                    let covered = targets.iter().any(|(_, tgt)| {
                        tgt.env == n.env.bind(var, d)
                            && tgt.pos == n.pos
                            && (tgt.term == guard_id || tgt.term == body_id)
                    });
                    if !covered {
                        return invalid(here(&format!("D value `{d}` has no body or guard node")));
                    }
                }
                // condition (3): every value encountered from the d* guard
                // instance must already be in D
                let mut reached = BTreeSet::new();
                let mut stack = alloc::vec![star_edge];
                while let Some(j) = stack.pop() {
                    if !reached.insert(j) {
                        continue;
                    }
                    stack.extend(out_edges[j].iter().copied());
                }
                for j in reached {
                    let v = t.value_at(ann.nodes[j].pos);
                    if !d_set.contains(v) {
                        return invalid(here(&format!(
                            "the guard evaluation encounters `{v}` outside D"
                        )));
                    }
                }
            }
            Formula::Box(_, _) | Formula::Forall(_, _) | Formula::Max(_, _) => {
                return invalid(here("constructor outside the guarded fragment"))
            }
        }
    }

    if super::annotation::has_cycle(ann.nodes.len(), &out_edges) {
        return invalid("the annotation has a dependency cycle".into());
    }
    Ok(AnnCheckResult::Valid)
}

/// Verdict of the good-prefix checker. `Good` is sound: every infinite
/// extension of the prefix satisfies the formula. `Unknown` carries no
/// claim; it also signals budget exhaustion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrefixVerdict {
    Good { annotation: GuardedAnnotation },
    Unknown { budget_exhausted: bool },
}

impl PrefixVerdict {
    pub fn is_good(&self) -> bool {
        matches!(self, PrefixVerdict::Good { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoodPrefixError {
    NotGuarded(String),
    Table(TableError),
    Unbound(String),
}

impl fmt::Display for GoodPrefixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoodPrefixError::NotGuarded(s) => write!(f, "not in the guarded fragment: {s}"),
            GoodPrefixError::Table(e) => e.fmt(f),
            GoodPrefixError::Unbound(s) => write!(f, "unbound data variable `{s}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GoodPrefixError {}

type Goal = (SubId, DataEnv, usize);

#[derive(Clone, Debug)]
struct CommitEntry {
    children: Vec<Goal>,
    witness: Option<GForallWitness>,
    /// prefix positions accessed anywhere in this sub-annotation
    reach: BTreeSet<usize>,
    /// whether any node of this sub-annotation sits at the boundary
    touches_boundary: bool,
}

/// Memoized sub-annotations that do not touch the synthetic boundary;
/// they remain valid verbatim when the prefix grows, which is what makes
/// re-checking after each fed event cheap.
#[derive(Clone, Debug, Default)]
pub struct GoodPrefixCache {
    committed: BTreeMap<Goal, CommitEntry>,
}

impl GoodPrefixCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.committed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.committed.is_empty()
    }
}

enum Outcome {
    Success,
    Fail { tentative: bool },
}

struct PrefixSearch<'a> {
    table: &'a SubTable,
    splits_by_id: BTreeMap<SubId, ExistsSplit>,
    id_by_path: BTreeMap<Vec<crate::ast::Step>, SubId>,
    w: &'a [DataValue],
    domain: Vec<DataValue>,
    budget: &'a mut Budget,
    committed: BTreeMap<Goal, CommitEntry>,
    failed: BTreeSet<Goal>,
    path: BTreeSet<Goal>,
    node_cap: usize,
    cap_hit: bool,
}

impl<'a> PrefixSearch<'a> {
    fn boundary(&self) -> usize {
        self.w.len()
    }

    fn solve(&mut self, goal: Goal) -> Result<Outcome, BudgetOrUnbound> {
        self.budget.spend(1).map_err(|_| BudgetOrUnbound::Budget)?;
        if self.committed.contains_key(&goal) {
            return Ok(Outcome::Success);
        }
        if self.failed.contains(&goal) {
            return Ok(Outcome::Fail { tentative: false });
        }
        if self.path.contains(&goal) {
            return Ok(Outcome::Fail { tentative: true });
        }
        if self.committed.len() + self.path.len() >= self.node_cap {
            self.cap_hit = true;
            return Ok(Outcome::Fail { tentative: true });
        }
        self.path.insert(goal.clone());
        let result = self.solve_inner(&goal);
        self.path.remove(&goal);
        let result = result?;
        if let Outcome::Fail { tentative: false } = result {
            self.failed.insert(goal);
        }
        Ok(result)
    }

    fn commit(&mut self, goal: &Goal, children: Vec<Goal>, witness: Option<GForallWitness>) -> Outcome {
        let mut reach = BTreeSet::new();
        let mut touches = goal.2 == self.boundary();
        if goal.2 < self.boundary() {
            reach.insert(goal.2);
        }
        for c in &children {
            if let Some(entry) = self.committed.get(c) {
                reach.extend(entry.reach.iter().copied());
                touches |= entry.touches_boundary;
            }
        }
        self.committed.insert(
            goal.clone(),
            CommitEntry {
                children,
                witness,
                reach,
                touches_boundary: touches,
            },
        );
        Outcome::Success
    }

    fn solve_inner(&mut self, goal: &Goal) -> Result<Outcome, BudgetOrUnbound> {
        let (id, env, pos) = goal.clone();
        let formula = self.table.formula(id).clone();
        let children = self.table.children(id).to_vec();
        let boundary = self.boundary();
        match formula {
            Formula::Tt => Ok(self.commit(goal, Vec::new(), None)),
            Formula::Ff => Ok(Outcome::Fail { tentative: false }),
            Formula::Diamond(b, _) => {
                if pos >= boundary {
                    // a diamond would consume an event we have not seen
                    return Ok(Outcome::Fail { tentative: false });
                }
                let holds = eval_bexpr(&b, &env, &self.w[pos])
                    .map_err(|e| BudgetOrUnbound::Unbound(e.var.as_str().to_string()))?;
                if !holds {
                    return Ok(Outcome::Fail { tentative: false });
                }
                let child = (children[0], env, pos + 1);
                match self.solve(child.clone())? {
                    Outcome::Success => Ok(self.commit(goal, alloc::vec![child], None)),
                    fail => Ok(fail),
                }
            }
            Formula::Min(_, _) => {
                let child = (children[0], env, pos);
                match self.solve(child.clone())? {
                    Outcome::Success => Ok(self.commit(goal, alloc::vec![child], None)),
                    fail => Ok(fail),
                }
            }
            Formula::Var(x) => {
                let binder = self
                    .table
                    .binder(&x)
                    .expect("guarded formulas are recursion-closed");
                let child = (binder, env, pos);
                match self.solve(child.clone())? {
                    Outcome::Success => Ok(self.commit(goal, alloc::vec![child], None)),
                    fail => Ok(fail),
                }
            }
            Formula::And(_, _) => {
                let mut picked = Vec::new();
                for c in children {
                    let child = (c, env.clone(), pos);
                    match self.solve(child.clone())? {
                        Outcome::Success => picked.push(child),
                        fail => return Ok(fail),
                    }
                }
                Ok(self.commit(goal, picked, None))
            }
            Formula::Or(_, _) => {
                let mut tentative = false;
                for c in children {
                    let child = (c, env.clone(), pos);
                    match self.solve(child.clone())? {
                        Outcome::Success => {
                            return Ok(self.commit(goal, alloc::vec![child], None))
                        }
                        Outcome::Fail { tentative: t } => tentative |= t,
                    }
                }
                Ok(Outcome::Fail { tentative })
            }
            Formula::Exists(x, _) => {
                let split = self.splits_by_id.get(&id).cloned().expect("derived ∃ split");
                let mut compare_vals = BTreeSet::new();
                for y in &split.compare {
                    let v = env
                        .get(y)
                        .ok_or_else(|| BudgetOrUnbound::Unbound(y.as_str().to_string()))?;
                    compare_vals.insert(v.clone());
                }
                let phi1 = self.id_by_path[&split.fresh_branch];
                let phi2 = split.seen_branch.as_ref().map(|p| self.id_by_path[p]);
                let mut tentative = false;
                for d in self.domain.clone() {
                    let branch = if compare_vals.contains(&d) {
                        match phi2 {
                            Some(p) => p,
                            None => continue,
                        }
                    } else {
                        phi1
                    };
                    let child = (branch, env.bind(&x, &d), pos);
                    match self.solve(child.clone())? {
                        Outcome::Success => {
                            return Ok(self.commit(goal, alloc::vec![child], None))
                        }
                        Outcome::Fail { tentative: t } => tentative |= t,
                    }
                }
                Ok(Outcome::Fail { tentative })
            }
            Formula::GForall { var, .. } => {
                let guard_id = children[0];
                let body_id = children[1];
                // one fresh representative per nesting level of guarded
                // universals, so nested instances never alias
                let marker = format!("{}g", crate::trace::RESERVED_PREFIX);
                let level = env
                    .values()
                    .filter(|v| v.as_str().starts_with(marker.as_str()))
                    .count();
                let mut avoid: Vec<DataValue> = self.w.to_vec();
                avoid.extend(env.values().cloned());
                avoid.extend(self.domain.iter().cloned());
                let d_star = fresh_values(&avoid, level + 1, "g")
                    .pop()
                    .expect("fresh value");
                let star_goal = (guard_id, env.bind(&var, &d_star), pos);
                match self.solve(star_goal.clone())? {
                    Outcome::Success => {}
                    fail => return Ok(fail),
                }
                let mut d_set: BTreeSet<DataValue> = env.values().cloned().collect();
                if let Some(entry) = self.committed.get(&star_goal) {
                    for &p in &entry.reach {
                        d_set.insert(self.w[p].clone());
                    }
                }
                let mut picked = alloc::vec![star_goal];
                let mut tentative = false;
                for d in &d_set {
                    let body_goal = (body_id, env.bind(&var, d), pos);
                    match self.solve(body_goal.clone())? {
                        Outcome::Success => {
                            picked.push(body_goal);
                            continue;
                        }
                        Outcome::Fail { tentative: t } => tentative |= t,
                    }
                    let guard_goal = (guard_id, env.bind(&var, d), pos);
                    match self.solve(guard_goal.clone())? {
                        Outcome::Success => picked.push(guard_goal),
                        Outcome::Fail { tentative: t } => {
                            return Ok(Outcome::Fail {
                                tentative: tentative || t,
                            })
                        }
                    }
                }
                let witness = GForallWitness {
                    d_set: d_set.into_iter().collect(),
                    d_star,
                };
                Ok(self.commit(goal, picked, Some(witness)))
            }
            Formula::Box(_, _) | Formula::Forall(_, _) | Formula::Max(_, _) => {
                unreachable!("rejected by the guarded-fragment check")
            }
        }
    }
}

enum BudgetOrUnbound {
    Budget,
    Unbound(String),
}

/// Checks whether `w` is certifiably a good prefix of `f` (under `env0`):
/// answers `Good` only if a finite guarded-branching annotation exists
/// whose every trace access lies within `w`. `Unknown` carries no claim.
pub fn good_prefix_guarded(
    f: &Formula,
    env0: &DataEnv,
    w: &[DataValue],
    budget: &mut Budget,
) -> Result<PrefixVerdict, GoodPrefixError> {
    let mut cache = GoodPrefixCache::new();
    good_prefix_guarded_cached(f, env0, w, budget, &mut cache)
}

/// [`good_prefix_guarded`] with a cache of boundary-free sub-annotations
/// carried across growing prefixes of the same formula.
pub fn good_prefix_guarded_cached(
    f: &Formula,
    env0: &DataEnv,
    w: &[DataValue],
    budget: &mut Budget,
    cache: &mut GoodPrefixCache,
) -> Result<PrefixVerdict, GoodPrefixError> {
    let check = check_guarded_root(f);
    if !check.accepted {
        return Err(GoodPrefixError::NotGuarded(
            check
                .rejection
                .map(|r| r.to_string())
                .unwrap_or_else(|| "rejected".into()),
        ));
    }
    let deriv = check.derivation;
    let table = SubTable::build(f).map_err(GoodPrefixError::Table)?;
    let id_by_path: BTreeMap<Vec<crate::ast::Step>, SubId> = (0..table.len())
        .map(|id| (table.item(id).path.clone(), id))
        .collect();
    let splits_by_id: BTreeMap<SubId, ExistsSplit> = deriv
        .exists_splits
        .iter()
        .filter_map(|(p, s)| id_by_path.get(p).map(|&id| (id, s.clone())))
        .collect();
    let domain = quant_domain(w, env0, f.quantifier_depth());
    let root: Goal = (table.root(), env0.clone(), 0);

    let mut committed = core::mem::take(&mut cache.committed);
    let mut failed: BTreeSet<Goal> = BTreeSet::new();
    let mut node_cap = 256usize;
    let verdict = loop {
        let before = committed.len();
        let mut search = PrefixSearch {
            table: &table,
            splits_by_id: splits_by_id.clone(),
            id_by_path: id_by_path.clone(),
            w,
            domain: domain.clone(),
            budget,
            committed: core::mem::take(&mut committed),
            failed: core::mem::take(&mut failed),
            path: BTreeSet::new(),
            node_cap,
            cap_hit: false,
        };
        let outcome = search.solve(root.clone());
        let cap_hit = search.cap_hit;
        committed = search.committed;
        failed = search.failed;
        match outcome {
            Err(BudgetOrUnbound::Budget) => {
                break PrefixVerdict::Unknown {
                    budget_exhausted: true,
                }
            }
            Err(BudgetOrUnbound::Unbound(v)) => return Err(GoodPrefixError::Unbound(v)),
            Ok(Outcome::Success) => {
                let annotation = assemble_guarded(&committed, &root);
                break PrefixVerdict::Good { annotation };
            }
            Ok(Outcome::Fail { tentative: false }) => {
                break PrefixVerdict::Unknown {
                    budget_exhausted: false,
                }
            }
            Ok(Outcome::Fail { tentative: true }) => {
                if committed.len() > before {
                    continue;
                }
                if cap_hit {
                    node_cap = node_cap.saturating_mul(2);
                } else {
                    break PrefixVerdict::Unknown {
                        budget_exhausted: false,
                    };
                }
            }
        }
    };
    // keep only boundary-free entries: they stay valid for longer prefixes
    cache.committed = committed
        .into_iter()
        .filter(|(_, e)| !e.touches_boundary)
        .collect();
    Ok(verdict)
}

fn assemble_guarded(committed: &BTreeMap<Goal, CommitEntry>, root: &Goal) -> GuardedAnnotation {
    let mut index: BTreeMap<Goal, usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut witnesses = BTreeMap::new();
    let mut queue = alloc::collections::VecDeque::new();
    index.insert(root.clone(), 0);
    nodes.push(AnnNode {
        term: root.0,
        env: root.1.clone(),
        pos: root.2,
    });
    queue.push_back(root.clone());
    while let Some(goal) = queue.pop_front() {
        let from = index[&goal];
        let entry = &committed[&goal];
        if let Some(w) = &entry.witness {
            witnesses.insert(from, w.clone());
        }
        for child in &entry.children {
            let to = match index.get(child) {
                Some(&i) => i,
                None => {
                    let i = nodes.len();
                    index.insert(child.clone(), i);
                    nodes.push(AnnNode {
                        term: child.0,
                        env: child.1.clone(),
                        pos: child.2,
                    });
                    queue.push_back(child.clone());
                    i
                }
            };
            edges.push((from, to));
        }
    }
    GuardedAnnotation {
        annotation: Annotation { nodes, edges },
        witnesses,
    }
}
