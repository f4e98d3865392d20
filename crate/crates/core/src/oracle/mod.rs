//! Brute-force semantics: fixpoint evaluation of full formulas over lasso
//! traces with a finitized quantifier domain, annotation witnesses for the
//! least-fixpoint fragment, and guarded-branching annotations for the
//! guarded fragment. This module is the ground truth the rest of the
//! toolkit is tested against.

mod annotation;
mod eval;
mod guarded;

pub use annotation::{
    check_annotation, find_finite_annotation, AnnCheckResult, AnnError, AnnNode, Annotation,
    FindError,
};
pub use eval::{lasso_eval, lasso_eval_closed, EvalError};
pub use guarded::{
    check_guarded_annotation, good_prefix_guarded, good_prefix_guarded_cached, GForallWitness,
    GoodPrefixCache, GoodPrefixError, GuardedAnnError, GuardedAnnotation, PrefixVerdict,
};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::ast::{DataEnv, DataValue, DataVar, Formula, Path, RecVar};
use crate::trace::{fresh_values, LassoTrace};

/// Identifier of a subterm occurrence (preorder index).
pub type SubId = usize;

/// Positional table of every subterm of a formula.
#[derive(Clone, Debug)]
pub struct SubTable {
    items: Vec<SubItem>,
    binder_ids: BTreeMap<RecVar, SubId>,
}

#[derive(Clone, Debug)]
pub struct SubItem {
    pub formula: Formula,
    pub path: Path,
    pub children: Vec<SubId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableError {
    /// Two fixed points bind the same recursion variable; normalize first.
    DuplicateBinder(RecVar),
}

impl core::fmt::Display for TableError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TableError::DuplicateBinder(x) => {
                write!(f, "recursion variable `{x}` is bound more than once")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TableError {}

impl SubTable {
    pub fn build(root: &Formula) -> Result<SubTable, TableError> {
        let mut table = SubTable {
            items: Vec::new(),
            binder_ids: BTreeMap::new(),
        };
        table.add(root, Vec::new())?;
        Ok(table)
    }

    fn add(&mut self, f: &Formula, path: Path) -> Result<SubId, TableError> {
        let id = self.items.len();
        self.items.push(SubItem {
            formula: f.clone(),
            path: path.clone(),
            children: Vec::new(),
        });
        if let Formula::Min(x, _) | Formula::Max(x, _) = f {
            if self.binder_ids.insert(x.clone(), id).is_some() {
                return Err(TableError::DuplicateBinder(x.clone()));
            }
        }
        let mut children = Vec::new();
        for (step, child) in f.children() {
            let mut child_path = path.clone();
            child_path.push(step);
            children.push(self.add(child, child_path)?);
        }
        self.items[id].children = children;
        Ok(id)
    }

    pub fn root(&self) -> SubId {
        0
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: SubId) -> &SubItem {
        &self.items[id]
    }

    pub fn formula(&self, id: SubId) -> &Formula {
        &self.items[id].formula
    }

    pub fn children(&self, id: SubId) -> &[SubId] {
        &self.items[id].children
    }

    /// Id of the fixed-point node binding `x`.
    pub fn binder(&self, x: &RecVar) -> Option<SubId> {
        self.binder_ids.get(x).copied()
    }

    /// Body child of a fixed-point or single-child node.
    pub fn body(&self, id: SubId) -> SubId {
        self.items[id].children[0]
    }
}

/// The finite set of values quantifiers range over when evaluating against
/// a given trace: the values on the trace, the values of the ambient
/// environment, and `depth`-many fresh representatives that occur nowhere
/// (pairwise distinct from everything).
pub fn quant_domain(
    trace_values: &[DataValue],
    env: &DataEnv,
    quantifier_depth: usize,
) -> Vec<DataValue> {
    let mut domain: Vec<DataValue> = trace_values.to_vec();
    for v in env.values() {
        if !domain.contains(v) {
            domain.push(v.clone());
        }
    }
    let fresh = fresh_values(&domain, quantifier_depth, "q");
    domain.extend(fresh);
    domain
}

/// Quantifier domain for a formula evaluated on a lasso under `env`.
pub fn quant_domain_for(f: &Formula, env: &DataEnv, t: &LassoTrace) -> Vec<DataValue> {
    quant_domain(&t.values(), env, f.quantifier_depth())
}

/// Relevant data variables of each fixed point: the free data variables of
/// the fixed point itself plus, transitively, those of the fixed points of
/// its free recursion variables. The interpretation of the fixed point is
/// a function of exactly these.
pub fn relevant_vars(table: &SubTable, id: SubId) -> Vec<DataVar> {
    let mut out: Vec<DataVar> = Vec::new();
    let mut stack = alloc::vec![id];
    let mut seen = alloc::collections::BTreeSet::new();
    while let Some(fx) = stack.pop() {
        if !seen.insert(fx) {
            continue;
        }
        let formula = table.formula(fx);
        for v in formula.free_data_vars() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        for y in formula.free_rec_vars() {
            if let Some(b) = table.binder(&y) {
                stack.push(b);
            }
        }
    }
    out.sort();
    out
}
