//! Annotations: dependency graphs witnessing satisfaction. A finite,
//! acyclic annotation rooted at (φ, δ, t) certifies t ∈ ⟦φ, δ⟧; for the
//! least-fixpoint fragment such witnesses exist exactly when the formula
//! holds, and [`find_finite_annotation`] searches for one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{eval_bexpr, DataEnv, DataValue, Formula};
use crate::budget::{Budget, BudgetExceeded};
use crate::fragments::{classify, Fragment};
use crate::oracle::{quant_domain, SubId, SubTable, TableError};
use crate::trace::LassoTrace;

/// One node of an annotation: a subterm occurrence, a data environment and
/// a lasso position (standing for the suffix starting there).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnnNode {
    pub term: SubId,
    pub env: DataEnv,
    pub pos: usize,
}

/// An annotation graph over the subterms of one formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Annotation {
    pub nodes: Vec<AnnNode>,
    /// directed dependency edges as index pairs into `nodes`
    pub edges: Vec<(usize, usize)>,
}

impl Annotation {
    pub fn node_set(&self) -> BTreeSet<(SubId, DataEnv, usize)> {
        self.nodes
            .iter()
            .map(|n| (n.term, n.env.clone(), n.pos))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnnError {
    BadNodeRef(String),
    Table(TableError),
    UnsupportedNode(String),
}

impl fmt::Display for AnnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnError::BadNodeRef(s) => write!(f, "malformed node reference: {s}"),
            AnnError::Table(e) => e.fmt(f),
            AnnError::UnsupportedNode(s) => write!(f, "unsupported node kind: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AnnError {}

/// Outcome of checking a candidate annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnnCheckResult {
    Valid,
    Invalid(String),
}

impl AnnCheckResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, AnnCheckResult::Valid)
    }
}

pub(crate) fn has_cycle(n: usize, out_edges: &[Vec<usize>]) -> bool {
    // iterative three-color DFS
    let mut color = alloc::vec![0u8; n];
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut stack = alloc::vec![(start, 0usize)];
        color[start] = 1;
        while let Some(&(v, next)) = stack.last() {
            if next < out_edges[v].len() {
                stack.last_mut().unwrap().1 += 1;
                let u = out_edges[v][next];
                match color[u] {
                    0 => {
                        color[u] = 1;
                        stack.push((u, 0));
                    }
                    1 => return true,
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    false
}

/// Verifies every annotation clause locally, plus acyclicity. Accepts iff
/// the candidate is a finite annotation for `(f, env0)` on the lasso's
/// denoted trace. Universal-quantifier nodes are checked over the
/// finitized quantifier domain.
pub fn check_annotation(
    f: &Formula,
    env0: &DataEnv,
    t: &LassoTrace,
    ann: &Annotation,
) -> Result<AnnCheckResult, AnnError> {
    let table = SubTable::build(f).map_err(AnnError::Table)?;
    let invalid = |s: String| Ok(AnnCheckResult::Invalid(s));

    for (i, n) in ann.nodes.iter().enumerate() {
        if n.term >= table.len() {
            return Err(AnnError::BadNodeRef(format!(
                "node {i} references subterm {} of a formula with {} subterms",
                n.term,
                table.len()
            )));
        }
        if n.pos >= t.len() {
            return Err(AnnError::BadNodeRef(format!(
                "node {i} references position {} of a lasso with {} positions",
                n.pos,
                t.len()
            )));
        }
    }
    for &(a, b) in &ann.edges {
        if a >= ann.nodes.len() || b >= ann.nodes.len() {
            return Err(AnnError::BadNodeRef(format!("edge ({a}, {b}) out of range")));
        }
    }

    let triples: BTreeSet<(SubId, DataEnv, usize)> = ann.node_set();
    if triples.len() != ann.nodes.len() {
        return invalid("duplicate annotation nodes".to_string());
    }
    if !triples.contains(&(table.root(), env0.clone(), 0)) {
        return invalid("the root triple (φ, δ, t) is missing".to_string());
    }

    let mut out_edges: Vec<Vec<usize>> = alloc::vec![Vec::new(); ann.nodes.len()];
    for &(a, b) in &ann.edges {
        out_edges[a].push(b);
    }

    let domain = quant_domain(&t.values(), env0, f.quantifier_depth().max(1));

    for (i, n) in ann.nodes.iter().enumerate() {
        let formula = table.formula(n.term);
        let children = table.children(n.term);
        let targets: Vec<&AnnNode> = out_edges[i].iter().map(|&j| &ann.nodes[j]).collect();
        let here = |s: &str| format!("node {i} ({formula:?} at position {}): {s}", n.pos);
        let expect_single_target = |want_term: SubId, want_env: &DataEnv, want_pos: usize| {
            let mut found = false;
            for tgt in &targets {
                if tgt.term == want_term && tgt.env == *want_env && tgt.pos == want_pos {
                    found = true;
                } else {
                    return Err("an edge leads to an unlicensed target");
                }
            }
            if found {
                Ok(())
            } else {
                Err("the required dependency edge is missing")
            }
        };
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
                if let Err(msg) = expect_single_target(children[0], &n.env, t.succ(n.pos)) {
                    return invalid(here(msg));
                }
            }
            Formula::Box(b, _) => {
                let d = t.value_at(n.pos).clone();
                match eval_bexpr(b, &n.env, &d) {
                    Ok(true) => {
                        if let Err(msg) = expect_single_target(children[0], &n.env, t.succ(n.pos)) {
                            return invalid(here(msg));
                        }
                    }
                    Ok(false) => {
                        if !targets.is_empty() {
                            return invalid(here("a blocked necessity licenses no edges"));
                        }
                    }
                    Err(e) => return invalid(here(&format!("{e}"))),
                }
            }
            Formula::Exists(x, _) => {
                let mut found = false;
                for tgt in &targets {
                    let ok = tgt.term == children[0]
                        && tgt.pos == n.pos
                        && tgt.env.get(x).is_some()
                        && tgt.env == n.env.bind(x, tgt.env.get(x).unwrap());
                    if !ok {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    found = true;
                }
                if !found {
                    return invalid(here("the existential witness edge is missing"));
                }
            }
            Formula::Forall(x, _) => {
                for tgt in &targets {
                    let ok = tgt.term == children[0]
                        && tgt.pos == n.pos
                        && tgt.env.get(x).is_some()
                        && tgt.env == n.env.bind(x, tgt.env.get(x).unwrap());
                    if !ok {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                }
                for d in &domain {
                    let want = (children[0], n.env.bind(x, d), n.pos);
                    let covered = targets
                        .iter()
                        .any(|tgt| (tgt.term, tgt.env.clone(), tgt.pos) == want);
                    if !covered {
                        return invalid(here(&format!(
                            "universal branching misses the instance `{d}`"
                        )));
                    }
                }
            }
            Formula::Or(_, _) => {
                let mut found = false;
                for tgt in &targets {
                    let ok = (tgt.term == children[0] || tgt.term == children[1])
                        && tgt.env == n.env
                        && tgt.pos == n.pos;
                    if !ok {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                    found = true;
                }
                if !found {
                    return invalid(here("the disjunction has no chosen branch"));
                }
            }
            Formula::And(_, _) => {
                for want_term in [children[0], children[1]] {
                    let want = (want_term, n.env.clone(), n.pos);
                    if !targets
                        .iter()
                        .any(|tgt| (tgt.term, tgt.env.clone(), tgt.pos) == want)
                    {
                        return invalid(here("a conjunct dependency is missing"));
                    }
                }
                for tgt in &targets {
                    let ok = (tgt.term == children[0] || tgt.term == children[1])
                        && tgt.env == n.env
                        && tgt.pos == n.pos;
                    if !ok {
                        return invalid(here("an edge leads to an unlicensed target"));
                    }
                }
            }
            Formula::Min(_, _) | Formula::Max(_, _) => {
                if let Err(msg) = expect_single_target(children[0], &n.env, n.pos) {
                    return invalid(here(msg));
                }
            }
            Formula::Var(x) => {
                let binder = match table.binder(x) {
                    Some(b) => b,
                    None => return invalid(here("recursion variable has no binder")),
                };
                // by the definition the variable depends on the fixed point's
                // body; the worked examples route it through the binder node
                // first. Accept either convention.
                let body = table.body(binder);
                let mut found = false;
                for tgt in &targets {
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
            Formula::GForall { .. } => {
                return Err(AnnError::UnsupportedNode(
                    "guarded universal quantifiers take guarded-branching annotations".into(),
                ))
            }
        }
    }

    if has_cycle(ann.nodes.len(), &out_edges) {
        return invalid("the annotation has a dependency cycle".to_string());
    }
    Ok(AnnCheckResult::Valid)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FindError {
    NotInFragment(Fragment),
    Budget(BudgetExceeded),
    Table(TableError),
    Unbound(String),
}

impl fmt::Display for FindError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FindError::NotInFragment(frag) => {
                write!(f, "annotation search requires a {frag} formula")
            }
            FindError::Budget(e) => e.fmt(f),
            FindError::Table(e) => e.fmt(f),
            FindError::Unbound(s) => write!(f, "unbound data variable `{s}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FindError {}

type Goal = (SubId, DataEnv, usize);

enum Outcome {
    Success,
    Fail { tentative: bool },
}

struct Finder<'a> {
    table: &'a SubTable,
    trace: &'a LassoTrace,
    domain: Vec<DataValue>,
    budget: &'a mut Budget,
    committed: BTreeMap<Goal, Vec<Goal>>,
    failed: BTreeSet<Goal>,
    path: BTreeSet<Goal>,
    node_cap: usize,
    cap_hit: bool,
}

impl<'a> Finder<'a> {
    fn solve(&mut self, goal: Goal) -> Result<Outcome, FindError> {
        self.budget.spend(1).map_err(FindError::Budget)?;
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
        let result = self.solve_inner(&goal)?;
        self.path.remove(&goal);
        match &result {
            Outcome::Success => {}
            Outcome::Fail { tentative: false } => {
                self.failed.insert(goal);
            }
            Outcome::Fail { tentative: true } => {}
        }
        Ok(result)
    }

    fn commit(&mut self, goal: &Goal, children: Vec<Goal>) -> Outcome {
        self.committed.insert(goal.clone(), children);
        Outcome::Success
    }

    fn solve_inner(&mut self, goal: &Goal) -> Result<Outcome, FindError> {
        let (id, env, pos) = goal.clone();
        let formula = self.table.formula(id).clone();
        let children = self.table.children(id).to_vec();
        match formula {
            Formula::Tt => Ok(self.commit(goal, Vec::new())),
            Formula::Ff => Ok(Outcome::Fail { tentative: false }),
            Formula::Diamond(b, _) => {
                let d = self.trace.value_at(pos).clone();
                let holds = eval_bexpr(&b, &env, &d)
                    .map_err(|e| FindError::Unbound(e.var.as_str().to_string()))?;
                if !holds {
                    return Ok(Outcome::Fail { tentative: false });
                }
                let child = (children[0], env, self.trace.succ(pos));
                match self.solve(child.clone())? {
                    Outcome::Success => Ok(self.commit(goal, alloc::vec![child])),
                    fail => Ok(fail),
                }
            }
            Formula::Exists(x, _) => {
                let mut tentative = false;
                for d in self.domain.clone() {
                    let child = (children[0], env.bind(&x, &d), pos);
                    match self.solve(child.clone())? {
                        Outcome::Success => return Ok(self.commit(goal, alloc::vec![child])),
                        Outcome::Fail { tentative: t } => tentative |= t,
                    }
                }
                Ok(Outcome::Fail { tentative })
            }
            Formula::Or(_, _) => {
                let mut tentative = false;
                for c in children {
                    let child = (c, env.clone(), pos);
                    match self.solve(child.clone())? {
                        Outcome::Success => return Ok(self.commit(goal, alloc::vec![child])),
                        Outcome::Fail { tentative: t } => tentative |= t,
                    }
                }
                Ok(Outcome::Fail { tentative })
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
                Ok(self.commit(goal, picked))
            }
            Formula::Min(_, _) => {
                let child = (children[0], env, pos);
                match self.solve(child.clone())? {
                    Outcome::Success => Ok(self.commit(goal, alloc::vec![child])),
                    fail => Ok(fail),
                }
            }
            Formula::Var(x) => {
                // route through the binder node, matching the worked examples
                let binder = self
                    .table
                    .binder(&x)
                    .expect("closed formula has binders for all recursion variables");
                let child = (binder, env, pos);
                match self.solve(child.clone())? {
                    Outcome::Success => Ok(self.commit(goal, alloc::vec![child])),
                    fail => Ok(fail),
                }
            }
            _ => unreachable!("constructor outside the least-fixpoint fragment"),
        }
    }
}

/// Searches for a finite annotation of a least-fixpoint-fragment formula
/// on a lasso, by depth-first search with iterative deepening over the
/// annotation size. Returns `Ok(None)` when no annotation exists;
/// exhausting the budget is an error, distinct from a definite no.
pub fn find_finite_annotation(
    f: &Formula,
    env0: &DataEnv,
    t: &LassoTrace,
    budget: &mut Budget,
) -> Result<Option<Annotation>, FindError> {
    // the searchable fragment is cHMLd plus literal ff leaves (which simply
    // never carry an annotation, like the ⟨⊥⟩tt they abbreviate)
    let report = classify(f);
    if !report.is_member(Fragment::CHmld) {
        let without_ff = strip_ff(f);
        if !classify(&without_ff).is_member(Fragment::CHmld) {
            return Err(FindError::NotInFragment(Fragment::CHmld));
        }
    }
    let table = SubTable::build(f).map_err(FindError::Table)?;
    let domain = quant_domain(&t.values(), env0, f.quantifier_depth());
    let root: Goal = (table.root(), env0.clone(), 0);

    let mut committed: BTreeMap<Goal, Vec<Goal>> = BTreeMap::new();
    let mut failed: BTreeSet<Goal> = BTreeSet::new();
    let mut node_cap = 64usize;
    loop {
        let before = committed.len();
        let mut finder = Finder {
            table: &table,
            trace: t,
            domain: domain.clone(),
            budget,
            committed: core::mem::take(&mut committed),
            failed: core::mem::take(&mut failed),
            path: BTreeSet::new(),
            node_cap,
            cap_hit: false,
        };
        let outcome = finder.solve(root.clone())?;
        let cap_hit = finder.cap_hit;
        committed = finder.committed;
        failed = finder.failed;
        match outcome {
            Outcome::Success => {
                return Ok(Some(assemble(&committed, &root)));
            }
            Outcome::Fail { tentative: false } => return Ok(None),
            Outcome::Fail { tentative: true } => {
                // commits made this round may unblock goals that failed on a
                // path cycle; retry until the committed set saturates
                if committed.len() > before {
                    continue;
                }
                if cap_hit {
                    node_cap = node_cap.saturating_mul(2);
                } else {
                    return Ok(None);
                }
            }
        }
    }
}

// replaces ff leaves by tt, to reuse the fragment check for gating
fn strip_ff(f: &Formula) -> Formula {
    match f {
        Formula::Ff => Formula::Tt,
        Formula::Tt | Formula::Var(_) => f.clone(),
        Formula::Diamond(b, body) => Formula::diamond(b.clone(), strip_ff(body)),
        Formula::Exists(x, body) => {
            Formula::Exists(x.clone(), alloc::boxed::Box::new(strip_ff(body)))
        }
        Formula::Or(l, r) => Formula::or(strip_ff(l), strip_ff(r)),
        Formula::And(l, r) => Formula::and(strip_ff(l), strip_ff(r)),
        Formula::Min(x, body) => Formula::Min(x.clone(), alloc::boxed::Box::new(strip_ff(body))),
        other => other.clone(),
    }
}

fn assemble(committed: &BTreeMap<Goal, Vec<Goal>>, root: &Goal) -> Annotation {
    let mut index: BTreeMap<Goal, usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
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
        for child in committed.get(&goal).into_iter().flatten() {
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
    Annotation { nodes, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn leak() -> Formula {
        parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap()
    }

    fn lasso(s: &str) -> LassoTrace {
        LassoTrace::parse_str(s).unwrap()
    }

    fn env(pairs: &[(&str, &str)]) -> DataEnv {
        DataEnv::from_pairs(
            pairs
                .iter()
                .map(|(k, v)| (crate::ast::DataVar::new(k), DataValue::new(v))),
        )
    }

    /// The worked ten-node witness for the leak formula on 0 2 0 1^ω.
    fn appendix_annotation() -> Annotation {
        let x0 = env(&[("x", "0")]);
        let nodes = alloc::vec![
            AnnNode { term: 0, env: env(&[]), pos: 0 }, // exists
            AnnNode { term: 1, env: x0.clone(), pos: 0 }, // <x=*>min
            AnnNode { term: 2, env: x0.clone(), pos: 1 }, // min
            AnnNode { term: 3, env: x0.clone(), pos: 1 }, // or
            AnnNode { term: 6, env: x0.clone(), pos: 1 }, // <x!=*>X
            AnnNode { term: 7, env: x0.clone(), pos: 2 }, // X
            AnnNode { term: 2, env: x0.clone(), pos: 2 }, // min
            AnnNode { term: 3, env: x0.clone(), pos: 2 }, // or
            AnnNode { term: 4, env: x0.clone(), pos: 2 }, // <x=*>tt
            AnnNode { term: 5, env: x0, pos: 3 },         // tt
        ];
        let edges = (0..9).map(|i| (i, i + 1)).collect();
        Annotation { nodes, edges }
    }

    #[test]
    fn appendix_annotation_is_valid() {
        let ann = appendix_annotation();
        let result = check_annotation(&leak(), &DataEnv::new(), &lasso("0 2 0 ; 1"), &ann).unwrap();
        assert_eq!(result, AnnCheckResult::Valid);
    }

    #[test]
    fn dropping_the_final_tt_node_invalidates() {
        let mut ann = appendix_annotation();
        ann.nodes.pop();
        ann.edges.pop();
        let result = check_annotation(&leak(), &DataEnv::new(), &lasso("0 2 0 ; 1"), &ann).unwrap();
        assert!(matches!(result, AnnCheckResult::Invalid(_)));
    }

    #[test]
    fn ff_nodes_are_rejected() {
        let f = parse_formula("tt | ff").unwrap();
        let ann = Annotation {
            nodes: alloc::vec![
                AnnNode { term: 0, env: env(&[]), pos: 0 },
                AnnNode { term: 2, env: env(&[]), pos: 0 },
            ],
            edges: alloc::vec![(0, 1)],
        };
        let result = check_annotation(&f, &DataEnv::new(), &lasso("; 1"), &ann).unwrap();
        assert!(matches!(result, AnnCheckResult::Invalid(_)));
    }

    #[test]
    fn cyclic_annotations_are_rejected() {
        // a self-justifying loop over a single-position lasso: every local
        // clause holds, only acyclicity fails
        let f = parse_formula("min X. tt | <true> X").unwrap();
        // subterms: 0 min, 1 or, 2 tt, 3 <true>X, 4 X
        let e = env(&[]);
        let ann = Annotation {
            nodes: alloc::vec![
                AnnNode { term: 0, env: e.clone(), pos: 0 },
                AnnNode { term: 1, env: e.clone(), pos: 0 },
                AnnNode { term: 3, env: e.clone(), pos: 0 },
                AnnNode { term: 4, env: e.clone(), pos: 0 },
            ],
            edges: alloc::vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        };
        let result = check_annotation(&f, &DataEnv::new(), &lasso("; 1"), &ann).unwrap();
        assert!(
            matches!(&result, AnnCheckResult::Invalid(msg) if msg.contains("cycle")),
            "{result:?}"
        );
    }

    #[test]
    fn bad_node_reference_is_an_error() {
        let ann = Annotation {
            nodes: alloc::vec![AnnNode { term: 99, env: env(&[]), pos: 0 }],
            edges: Vec::new(),
        };
        assert!(check_annotation(&leak(), &DataEnv::new(), &lasso("0 ; 1"), &ann).is_err());
    }

    #[test]
    fn search_reproduces_the_appendix_witness() {
        let found = find_finite_annotation(
            &leak(),
            &DataEnv::new(),
            &lasso("0 2 0 ; 1"),
            &mut Budget::default(),
        )
        .unwrap()
        .expect("an annotation exists");
        assert_eq!(found.node_set(), appendix_annotation().node_set());
        let result =
            check_annotation(&leak(), &DataEnv::new(), &lasso("0 2 0 ; 1"), &found).unwrap();
        assert_eq!(result, AnnCheckResult::Valid);
    }

    #[test]
    fn search_fails_when_formula_is_violated() {
        let found = find_finite_annotation(
            &leak(),
            &DataEnv::new(),
            &lasso("0 ; 1"),
            &mut Budget::default(),
        )
        .unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn search_returns_none_for_ff() {
        let found = find_finite_annotation(
            &Formula::Ff,
            &DataEnv::new(),
            &lasso("; 1"),
            &mut Budget::default(),
        )
        .unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn search_rejects_formulas_outside_the_fragment() {
        let f = parse_formula("max X. [true] X").unwrap();
        assert!(matches!(
            find_finite_annotation(&f, &DataEnv::new(), &lasso("; 1"), &mut Budget::default()),
            Err(FindError::NotInFragment(_))
        ));
    }

    #[test]
    fn search_agrees_with_eval_on_dist() {
        let dist = parse_formula(
            "exists x. <*=x> min X. <x=*> tt | \
             ((exists y. <*=y> min Y. <*=x> tt | <*!=x & *!=y> Y) & <*!=x> X)",
        )
        .unwrap();
        let t = lasso("3 1 2 3 ; 9");
        let sat =
            crate::oracle::lasso_eval_closed(&dist, &t, &mut Budget::default()).unwrap();
        assert!(sat);
        let ann = find_finite_annotation(&dist, &DataEnv::new(), &t, &mut Budget::default())
            .unwrap()
            .expect("dist holds so an annotation exists");
        let result = check_annotation(&dist, &DataEnv::new(), &t, &ann).unwrap();
        assert_eq!(result, AnnCheckResult::Valid);
    }
}
