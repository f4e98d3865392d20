//! Formula syntax: data values, constraint expressions and the formula AST.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use core::fmt;

/// An opaque token from the countably infinite data domain.
///
/// Equality is the only relation the semantics ever consults; the `Ord`
/// impl exists purely so values can key ordered maps and produce
/// deterministic output.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataValue(Arc<str>);

impl DataValue {
    pub fn new(token: &str) -> Self {
        DataValue(Arc::from(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for DataValue {
    fn from(s: &str) -> Self {
        DataValue::new(s)
    }
}

/// A data variable (lowercase-initial identifier in the concrete syntax).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataVar(Arc<str>);

impl DataVar {
    pub fn new(name: &str) -> Self {
        DataVar(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for DataVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for DataVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for DataVar {
    fn from(s: &str) -> Self {
        DataVar::new(s)
    }
}

/// A recursion variable (uppercase-initial identifier in the concrete syntax).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecVar(Arc<str>);

impl RecVar {
    pub fn new(name: &str) -> Self {
        RecVar(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for RecVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for RecVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for RecVar {
    fn from(s: &str) -> Self {
        RecVar::new(s)
    }
}

/// Either a data variable or the placeholder `*` for the current action.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataTerm {
    Var(DataVar),
    Star,
}

/// Quantifier-free boolean constraint expression over variables and `*`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BExpr {
    True,
    Eq(DataTerm, DataTerm),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
}

impl BExpr {
    pub fn not(b: BExpr) -> BExpr {
        BExpr::Not(Box::new(b))
    }

    pub fn and(a: BExpr, b: BExpr) -> BExpr {
        BExpr::And(Box::new(a), Box::new(b))
    }

    /// `lhs != rhs` as sugar for `!(lhs = rhs)`.
    pub fn neq(lhs: DataTerm, rhs: DataTerm) -> BExpr {
        BExpr::not(BExpr::Eq(lhs, rhs))
    }

    /// `* = x`
    pub fn star_eq(x: &DataVar) -> BExpr {
        BExpr::Eq(DataTerm::Star, DataTerm::Var(x.clone()))
    }

    /// `* != x`
    pub fn star_neq(x: &DataVar) -> BExpr {
        BExpr::neq(DataTerm::Star, DataTerm::Var(x.clone()))
    }

    /// Data variables mentioned, in first-occurrence order.
    pub fn vars(&self) -> Vec<DataVar> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<DataVar>) {
        match self {
            BExpr::True => {}
            BExpr::Eq(l, r) => {
                for t in [l, r] {
                    if let DataTerm::Var(x) = t {
                        if !out.contains(x) {
                            out.push(x.clone());
                        }
                    }
                }
            }
            BExpr::Not(b) => b.collect_vars(out),
            BExpr::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Flattens a conjunction into its non-`And` conjuncts.
    pub fn conjuncts(&self) -> Vec<&BExpr> {
        let mut out = Vec::new();
        fn go<'a>(b: &'a BExpr, out: &mut Vec<&'a BExpr>) {
            match b {
                BExpr::And(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

/// Formulas of the logic. `GForall` is the guarded universal quantifier,
/// kept as an explicit node so the guard machinery can exploit its shape;
/// `desugar_gforall` expands it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Tt,
    Ff,
    Diamond(BExpr, Box<Formula>),
    Box(BExpr, Box<Formula>),
    Exists(DataVar, Box<Formula>),
    Forall(DataVar, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Min(RecVar, Box<Formula>),
    Max(RecVar, Box<Formula>),
    Var(RecVar),
    GForall {
        guard: Box<Formula>,
        frees: Vec<DataVar>,
        var: DataVar,
        body: Box<Formula>,
    },
}

/// Edge from a formula node to one of its children, used in witness paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Body,
    Left,
    Right,
    Guard,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::Body => "body",
            Step::Left => "left",
            Step::Right => "right",
            Step::Guard => "guard",
        }
    }
}

/// Path from the root of a formula to a subterm.
pub type Path = Vec<Step>;

pub fn path_string(p: &[Step]) -> String {
    if p.is_empty() {
        return ".".to_string();
    }
    let mut s = String::new();
    for step in p {
        s.push('.');
        s.push_str(step.name());
    }
    s
}

impl Formula {
    pub fn diamond(guard: BExpr, body: Formula) -> Formula {
        Formula::Diamond(guard, Box::new(body))
    }

    pub fn box_mod(guard: BExpr, body: Formula) -> Formula {
        Formula::Box(guard, Box::new(body))
    }

    pub fn exists(x: impl Into<DataVar>, body: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(body))
    }

    pub fn forall(x: impl Into<DataVar>, body: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(body))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn min(x: impl Into<RecVar>, body: Formula) -> Formula {
        Formula::Min(x.into(), Box::new(body))
    }

    pub fn max(x: impl Into<RecVar>, body: Formula) -> Formula {
        Formula::Max(x.into(), Box::new(body))
    }

    pub fn rec_var(x: impl Into<RecVar>) -> Formula {
        Formula::Var(x.into())
    }

    /// `tt` if `a` is trivially true, otherwise the conjunction.
    pub fn and_smart(l: Formula, r: Formula) -> Formula {
        match (l, r) {
            (Formula::Tt, r) => r,
            (l, Formula::Tt) => l,
            (Formula::Ff, _) | (_, Formula::Ff) => Formula::Ff,
            (l, r) => Formula::and(l, r),
        }
    }

    pub fn or_smart(l: Formula, r: Formula) -> Formula {
        match (l, r) {
            (Formula::Ff, r) => r,
            (l, Formula::Ff) => l,
            (l, r) => Formula::or(l, r),
        }
    }

    /// `⋀_{y ∈ set, y ≠ x} <x != y> tt`, empty conjunction read as `tt`.
    pub fn neq_set(x: &DataVar, set: &[DataVar]) -> Formula {
        let mut out = Formula::Tt;
        for y in set {
            if y == x {
                continue;
            }
            let atom = Formula::diamond(
                BExpr::neq(DataTerm::Var(x.clone()), DataTerm::Var(y.clone())),
                Formula::Tt,
            );
            out = Formula::and_smart(out, atom);
        }
        out
    }

    /// `⋁_{y ∈ set, y ≠ x} <x = y> tt`, empty disjunction read as `ff`.
    pub fn sim_set(x: &DataVar, set: &[DataVar]) -> Formula {
        let mut out = Formula::Ff;
        for y in set {
            if y == x {
                continue;
            }
            let atom = Formula::diamond(
                BExpr::Eq(DataTerm::Var(x.clone()), DataTerm::Var(y.clone())),
                Formula::Tt,
            );
            out = Formula::or_smart(out, atom);
        }
        out
    }

    /// Immediate children with the edge leading to each.
    pub fn children(&self) -> Vec<(Step, &Formula)> {
        match self {
            Formula::Tt | Formula::Ff | Formula::Var(_) => Vec::new(),
            Formula::Diamond(_, f)
            | Formula::Box(_, f)
            | Formula::Exists(_, f)
            | Formula::Forall(_, f)
            | Formula::Min(_, f)
            | Formula::Max(_, f) => alloc::vec![(Step::Body, &**f)],
            Formula::Or(l, r) | Formula::And(l, r) => {
                alloc::vec![(Step::Left, &**l), (Step::Right, &**r)]
            }
            Formula::GForall { guard, body, .. } => {
                alloc::vec![(Step::Guard, &**guard), (Step::Body, &**body)]
            }
        }
    }

    /// Free data variables, in first-occurrence order.
    pub fn free_data_vars(&self) -> Vec<DataVar> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free_data(&mut bound, &mut out);
        out
    }

    fn collect_free_data(&self, bound: &mut Vec<DataVar>, out: &mut Vec<DataVar>) {
        let record = |vars: Vec<DataVar>, bound: &Vec<DataVar>, out: &mut Vec<DataVar>| {
            for v in vars {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::Tt | Formula::Ff | Formula::Var(_) => {}
            Formula::Diamond(b, f) | Formula::Box(b, f) => {
                record(b.vars(), bound, out);
                f.collect_free_data(bound, out);
            }
            Formula::Exists(x, f) | Formula::Forall(x, f) => {
                bound.push(x.clone());
                f.collect_free_data(bound, out);
                bound.pop();
            }
            Formula::Or(l, r) | Formula::And(l, r) => {
                l.collect_free_data(bound, out);
                r.collect_free_data(bound, out);
            }
            Formula::Min(_, f) | Formula::Max(_, f) => f.collect_free_data(bound, out),
            Formula::GForall {
                guard,
                frees,
                var,
                body,
            } => {
                record(frees.clone(), bound, out);
                bound.push(var.clone());
                guard.collect_free_data(bound, out);
                body.collect_free_data(bound, out);
                bound.pop();
            }
        }
    }

    /// Free recursion variables.
    pub fn free_rec_vars(&self) -> BTreeSet<RecVar> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        self.collect_free_rec(&mut bound, &mut out);
        out
    }

    fn collect_free_rec(&self, bound: &mut Vec<RecVar>, out: &mut BTreeSet<RecVar>) {
        match self {
            Formula::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Formula::Min(x, f) | Formula::Max(x, f) => {
                bound.push(x.clone());
                f.collect_free_rec(bound, out);
                bound.pop();
            }
            _ => {
                for (_, c) in self.children() {
                    c.collect_free_rec(bound, out);
                }
            }
        }
    }

    /// All data variables occurring anywhere (bound or free), first-occurrence order.
    pub fn all_data_vars(&self) -> Vec<DataVar> {
        let mut out = Vec::new();
        self.collect_all_data(&mut out);
        out
    }

    fn collect_all_data(&self, out: &mut Vec<DataVar>) {
        let push = |v: &DataVar, out: &mut Vec<DataVar>| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            Formula::Diamond(b, f) | Formula::Box(b, f) => {
                for v in b.vars() {
                    push(&v, out);
                }
                f.collect_all_data(out);
            }
            Formula::Exists(x, f) | Formula::Forall(x, f) => {
                push(x, out);
                f.collect_all_data(out);
            }
            Formula::GForall {
                guard,
                frees,
                var,
                body,
            } => {
                for v in frees {
                    push(v, out);
                }
                push(var, out);
                guard.collect_all_data(out);
                body.collect_all_data(out);
            }
            _ => {
                for (_, c) in self.children() {
                    c.collect_all_data(out);
                }
            }
        }
    }

    /// Nesting depth of data quantifiers (gforall counts its implicit pair as one).
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.quantifier_depth(),
            Formula::GForall { guard, body, .. } => {
                1 + guard.quantifier_depth().max(body.quantifier_depth())
            }
            _ => self
                .children()
                .iter()
                .map(|(_, c)| c.quantifier_depth())
                .max()
                .unwrap_or(0),
        }
    }

    /// Maximum nesting of modal operators.
    pub fn modal_height(&self) -> usize {
        match self {
            Formula::Diamond(_, f) | Formula::Box(_, f) => 1 + f.modal_height(),
            _ => self
                .children()
                .iter()
                .map(|(_, c)| c.modal_height())
                .max()
                .unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|(_, c)| c.size()).sum::<usize>()
    }
}

/// A finite partial map from data variables to values. Looking up an
/// unbound variable is an error, never a default.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataEnv(BTreeMap<DataVar, DataValue>);

impl DataEnv {
    pub fn new() -> Self {
        DataEnv(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (DataVar, DataValue)>) -> Self {
        DataEnv(pairs.into_iter().collect())
    }

    pub fn lookup(&self, x: &DataVar) -> Result<&DataValue, UnboundVar> {
        self.0.get(x).ok_or_else(|| UnboundVar { var: x.clone() })
    }

    pub fn get(&self, x: &DataVar) -> Option<&DataValue> {
        self.0.get(x)
    }

    /// `self[x ↦ d]`, overwriting any previous binding.
    pub fn bind(&self, x: &DataVar, d: &DataValue) -> DataEnv {
        let mut m = self.0.clone();
        m.insert(x.clone(), d.clone());
        DataEnv(m)
    }

    pub fn domain(&self) -> impl Iterator<Item = &DataVar> {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = &DataValue> {
        self.0.values()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DataVar, &DataValue)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Restriction of the environment to the given variables.
    pub fn restrict(&self, vars: &[DataVar]) -> DataEnv {
        DataEnv(
            self.0
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

impl fmt::Display for DataEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnboundVar {
    pub var: DataVar,
}

impl fmt::Display for UnboundVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unbound data variable `{}`", self.var)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for UnboundVar {}

/// Evaluates a constraint expression with `*` bound to `current`.
pub fn eval_bexpr(b: &BExpr, env: &DataEnv, current: &DataValue) -> Result<bool, UnboundVar> {
    let term = |t: &DataTerm| -> Result<DataValue, UnboundVar> {
        match t {
            DataTerm::Star => Ok(current.clone()),
            DataTerm::Var(x) => env.lookup(x).cloned(),
        }
    };
    match b {
        BExpr::True => Ok(true),
        BExpr::Eq(l, r) => Ok(term(l)? == term(r)?),
        BExpr::Not(inner) => Ok(!eval_bexpr(inner, env, current)?),
        BExpr::And(l, r) => Ok(eval_bexpr(l, env, current)? && eval_bexpr(r, env, current)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> DataValue {
        DataValue::new(s)
    }

    #[test]
    fn bexpr_eval_star_matches_binding() {
        let env = DataEnv::from_pairs([(DataVar::new("x"), v("1"))]);
        let b = BExpr::star_eq(&DataVar::new("x"));
        assert!(eval_bexpr(&b, &env, &v("1")).unwrap());
        assert!(!eval_bexpr(&b, &env, &v("2")).unwrap());
    }

    #[test]
    fn bexpr_eval_true_any_env() {
        assert!(eval_bexpr(&BExpr::True, &DataEnv::new(), &v("z")).unwrap());
    }

    #[test]
    fn bexpr_eval_conjoined_negations() {
        // !(* = x) & !(* = y) with x -> 1, y -> 2, current 3
        let env = DataEnv::from_pairs([
            (DataVar::new("x"), v("1")),
            (DataVar::new("y"), v("2")),
        ]);
        let b = BExpr::and(
            BExpr::star_neq(&DataVar::new("x")),
            BExpr::star_neq(&DataVar::new("y")),
        );
        assert!(eval_bexpr(&b, &env, &v("3")).unwrap());
        assert!(!eval_bexpr(&b, &env, &v("2")).unwrap());
        assert!(!eval_bexpr(&b, &env, &v("1")).unwrap());
    }

    #[test]
    fn bexpr_eval_unbound_is_error() {
        let b = BExpr::star_eq(&DataVar::new("x"));
        assert!(eval_bexpr(&b, &DataEnv::new(), &v("1")).is_err());
    }

    #[test]
    fn neq_set_empty_is_tt() {
        let x = DataVar::new("x");
        assert_eq!(Formula::neq_set(&x, &[]), Formula::Tt);
        assert_eq!(Formula::neq_set(&x, &[x.clone()]), Formula::Tt);
    }

    #[test]
    fn sim_set_empty_is_ff() {
        let x = DataVar::new("x");
        assert_eq!(Formula::sim_set(&x, &[]), Formula::Ff);
    }

    #[test]
    fn free_vars_of_leak_body() {
        // min X. <x=*> tt | <x!=*> X   has free data var x
        let x = DataVar::new("x");
        let f = Formula::min(
            "X",
            Formula::or(
                Formula::diamond(BExpr::star_eq(&x), Formula::Tt),
                Formula::diamond(BExpr::star_neq(&x), Formula::rec_var("X")),
            ),
        );
        assert_eq!(f.free_data_vars(), alloc::vec![x]);
        assert!(f.free_rec_vars().is_empty());
    }
}
