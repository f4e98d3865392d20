//! Syntactic fragments and the guarded-quantifier machinery: membership
//! classification, the guarded fragment with (V, F) tracking, guarded
//! universal quantifier desugaring and the `gd` guarding transformation.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{path_string, BExpr, DataTerm, DataVar, Formula, Path, RecVar, Step};

/// An insertion-ordered set of data variables. Emission order follows
/// insertion; membership ignores order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet(Vec<DataVar>);

impl VarSet {
    pub fn new() -> Self {
        VarSet(Vec::new())
    }

    pub fn from_iter(vars: impl IntoIterator<Item = DataVar>) -> Self {
        let mut s = VarSet::new();
        for v in vars {
            s.insert(v);
        }
        s
    }

    pub fn insert(&mut self, v: DataVar) {
        if !self.0.contains(&v) {
            self.0.push(v);
        }
    }

    pub fn with(&self, v: &DataVar) -> VarSet {
        let mut s = self.clone();
        s.insert(v.clone());
        s
    }

    pub fn without(&self, v: &DataVar) -> VarSet {
        VarSet(self.0.iter().filter(|u| *u != v).cloned().collect())
    }

    pub fn contains(&self, v: &DataVar) -> bool {
        self.0.contains(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DataVar> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[DataVar] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Name-sorted copy, used wherever set identity matters.
    pub fn sorted(&self) -> Vec<DataVar> {
        let mut v = self.0.clone();
        v.sort();
        v
    }

    pub fn set_eq(&self, other: &[DataVar]) -> bool {
        self.sorted() == VarSet::from_iter(other.iter().cloned()).sorted()
    }
}

/// The named fragments of the logic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fragment {
    Hmld,
    CHmld,
    SHmld,
    DisjHmld,
    ConjHmld,
    MinHmld,
    RecHmld,
}

impl Fragment {
    pub const ALL: [Fragment; 7] = [
        Fragment::Hmld,
        Fragment::CHmld,
        Fragment::SHmld,
        Fragment::DisjHmld,
        Fragment::ConjHmld,
        Fragment::MinHmld,
        Fragment::RecHmld,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fragment::Hmld => "HMLd",
            Fragment::CHmld => "cHMLd",
            Fragment::SHmld => "sHMLd",
            Fragment::DisjHmld => "disjHMLd",
            Fragment::ConjHmld => "conjHMLd",
            Fragment::MinHmld => "minHMLd",
            Fragment::RecHmld => "recHMLd",
        }
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Membership plus, on failure, the first offending node in preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentStatus {
    pub member: bool,
    pub witness: Option<Path>,
}

/// Per-fragment membership for one formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentReport {
    statuses: BTreeMap<Fragment, FragmentStatus>,
}

impl FragmentReport {
    pub fn status(&self, fragment: Fragment) -> &FragmentStatus {
        &self.statuses[&fragment]
    }

    pub fn is_member(&self, fragment: Fragment) -> bool {
        self.statuses[&fragment].member
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Fragment, &FragmentStatus)> {
        self.statuses.iter()
    }
}

// Does the grammar of `fragment` contain this constructor? GForall stands
// for its desugaring (∃, ∧, ∀, ∨ without fixpoints), so it is admitted
// exactly where all four are.
fn node_allowed(f: &Formula, fragment: Fragment) -> bool {
    use Formula::*;
    match fragment {
        Fragment::RecHmld => true,
        Fragment::MinHmld => !matches!(f, Max(_, _)),
        Fragment::Hmld => !matches!(f, Min(_, _) | Max(_, _) | Var(_)),
        Fragment::CHmld => matches!(
            f,
            Tt | Diamond(_, _) | Exists(_, _) | Or(_, _) | And(_, _) | Min(_, _) | Var(_)
        ),
        Fragment::DisjHmld => {
            matches!(f, Tt | Diamond(_, _) | Exists(_, _) | Or(_, _) | Min(_, _) | Var(_))
        }
        Fragment::SHmld => matches!(
            f,
            Ff | Box(_, _) | Forall(_, _) | Or(_, _) | And(_, _) | Max(_, _) | Var(_)
        ),
        Fragment::ConjHmld => {
            matches!(f, Ff | Box(_, _) | Forall(_, _) | And(_, _) | Max(_, _) | Var(_))
        }
    }
}

fn first_offender(f: &Formula, fragment: Fragment, path: &mut Path) -> Option<Path> {
    if !node_allowed(f, fragment) {
        return Some(path.clone());
    }
    for (step, child) in f.children() {
        path.push(step);
        if let Some(w) = first_offender(child, fragment, path) {
            path.pop();
            return Some(w);
        }
        path.pop();
    }
    None
}

/// Exact syntactic membership in each fragment, with a witness path at the
/// first offending node for each failed fragment.
pub fn classify(f: &Formula) -> FragmentReport {
    let mut statuses = BTreeMap::new();
    for fragment in Fragment::ALL {
        let witness = first_offender(f, fragment, &mut Vec::new());
        statuses.insert(
            fragment,
            FragmentStatus {
                member: witness.is_none(),
                witness,
            },
        );
    }
    FragmentReport { statuses }
}

/// Expands one guarded universal quantifier:
/// `∀^γ_F x. φ  ≜  ∃x.(x≠F ∧ γ) ∧ ∀x.((x≠F ∧ γ) ∨ φ)`,
/// with `x≠F` the finite conjunction over F∖{x} (empty conjunction = tt).
pub fn desugar_gforall(guard: &Formula, frees: &[DataVar], var: &DataVar, body: &Formula) -> Formula {
    let guarded = Formula::and_smart(Formula::neq_set(var, frees), guard.clone());
    Formula::and(
        Formula::Exists(var.clone(), Box::new(guarded.clone())),
        Formula::Forall(
            var.clone(),
            Box::new(Formula::or(guarded, body.clone())),
        ),
    )
}

/// Recursively expands every guarded universal quantifier.
pub fn desugar_all(f: &Formula) -> Formula {
    match f {
        Formula::GForall {
            guard,
            frees,
            var,
            body,
        } => {
            let guard = desugar_all(guard);
            let body = desugar_all(body);
            desugar_gforall(&guard, frees, var, &body)
        }
        Formula::Tt => Formula::Tt,
        Formula::Ff => Formula::Ff,
        Formula::Var(x) => Formula::Var(x.clone()),
        Formula::Diamond(b, body) => Formula::diamond(b.clone(), desugar_all(body)),
        Formula::Box(b, body) => Formula::box_mod(b.clone(), desugar_all(body)),
        Formula::Exists(x, body) => Formula::Exists(x.clone(), Box::new(desugar_all(body))),
        Formula::Forall(x, body) => Formula::Forall(x.clone(), Box::new(desugar_all(body))),
        Formula::Or(l, r) => Formula::or(desugar_all(l), desugar_all(r)),
        Formula::And(l, r) => Formula::and(desugar_all(l), desugar_all(r)),
        Formula::Min(x, body) => Formula::Min(x.clone(), Box::new(desugar_all(body))),
        Formula::Max(x, body) => Formula::Max(x.clone(), Box::new(desugar_all(body))),
    }
}

/// Why a formula fell outside the guarded fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedRejection {
    pub path: Path,
    pub reason: String,
}

impl fmt::Display for GuardedRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", path_string(&self.path), self.reason)
    }
}

/// How an existential node was read against the grammar's split form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExistsSplit {
    pub var: DataVar,
    /// the V-set the split compares against (may be empty: plain ∃)
    pub compare: Vec<DataVar>,
    /// path of the branch taken when the witness differs from all of V
    pub fresh_branch: Path,
    /// path of the branch taken when the witness equals some V value
    pub seen_branch: Option<Path>,
}

/// Derivation data for a formula accepted by [`check_guarded`]: the (V, F)
/// context of every subformula and the recognized shape of each ∃ node.
#[derive(Clone, Debug, Default)]
pub struct GuardedDerivation {
    pub contexts: BTreeMap<Path, (VarSet, VarSet)>,
    pub exists_splits: BTreeMap<Path, ExistsSplit>,
}

/// Outcome of the guarded-fragment check.
#[derive(Clone, Debug)]
pub struct GuardedCheck {
    pub accepted: bool,
    pub rejection: Option<GuardedRejection>,
    pub derivation: GuardedDerivation,
}

fn is_star_neq(b: &BExpr, x: &DataVar) -> bool {
    match b {
        BExpr::Not(inner) => match &**inner {
            BExpr::Eq(DataTerm::Star, DataTerm::Var(y)) => y == x,
            BExpr::Eq(DataTerm::Var(y), DataTerm::Star) => y == x,
            _ => false,
        },
        _ => false,
    }
}

fn check_guarded_rec(
    f: &Formula,
    v: &VarSet,
    fset: &VarSet,
    path: &mut Path,
    deriv: &mut GuardedDerivation,
) -> Result<(), GuardedRejection> {
    deriv.contexts.insert(path.clone(), (v.clone(), fset.clone()));
    let reject = |path: &Path, reason: String| GuardedRejection {
        path: path.clone(),
        reason,
    };
    match f {
        Formula::Tt | Formula::Ff | Formula::Var(_) => Ok(()),
        Formula::Min(_, body) => {
            path.push(Step::Body);
            let r = check_guarded_rec(body, v, fset, path, deriv);
            path.pop();
            r
        }
        Formula::Max(_, _) => Err(reject(path, "max is not in the guarded fragment".into())),
        Formula::Box(_, _) => Err(reject(path, "necessity is not in the guarded fragment".into())),
        Formula::Forall(_, _) => Err(reject(
            path,
            "bare universal quantifier (only gforall is in the guarded fragment)".into(),
        )),
        Formula::Diamond(b, body) => {
            let conjuncts = b.conjuncts();
            for x in v.iter() {
                if !conjuncts.iter().any(|c| is_star_neq(c, x)) {
                    return Err(reject(
                        path,
                        format!("diamond guard is missing the required conjunct `*!={x}`"),
                    ));
                }
            }
            for var in b.vars() {
                if !fset.contains(&var) {
                    return Err(reject(
                        path,
                        format!("diamond guard mentions `{var}` outside the tracked free set"),
                    ));
                }
            }
            path.push(Step::Body);
            let r = check_guarded_rec(body, v, fset, path, deriv);
            path.pop();
            r
        }
        Formula::And(l, r) | Formula::Or(l, r) => {
            path.push(Step::Left);
            check_guarded_rec(l, v, fset, path, deriv)?;
            path.pop();
            path.push(Step::Right);
            let out = check_guarded_rec(r, v, fset, path, deriv);
            path.pop();
            out
        }
        Formula::GForall {
            guard,
            frees,
            var,
            body,
        } => {
            if !fset.set_eq(frees) {
                return Err(reject(
                    path,
                    format!(
                        "gforall frees annotation {{{}}} does not match the tracked free set {{{}}}",
                        frees
                            .iter()
                            .map(|v| v.as_str())
                            .collect::<Vec<_>>()
                            .join(", "),
                        fset.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
            path.push(Step::Guard);
            check_guarded_rec(guard, &v.with(var), &fset.with(var), path, deriv)?;
            path.pop();
            path.push(Step::Body);
            let out = check_guarded_rec(body, &v.without(var), &fset.with(var), path, deriv);
            path.pop();
            out
        }
        Formula::Exists(x, body) => {
            let compare: Vec<DataVar> = v.iter().filter(|y| *y != x).cloned().collect();
            if compare.is_empty() {
                let mut fresh_branch = path.clone();
                fresh_branch.push(Step::Body);
                deriv.exists_splits.insert(
                    path.clone(),
                    ExistsSplit {
                        var: x.clone(),
                        compare,
                        fresh_branch: fresh_branch.clone(),
                        seen_branch: None,
                    },
                );
                path.push(Step::Body);
                let r = check_guarded_rec(body, &v.without(x), &fset.with(x), path, deriv);
                path.pop();
                r
            } else {
                let expected_neq = Formula::neq_set(x, &compare);
                let expected_sim = Formula::sim_set(x, &compare);
                match &**body {
                    Formula::Or(l, rr) => {
                        let (phi1, phi2) = match (&**l, &**rr) {
                            (Formula::And(a, p1), Formula::And(b, p2))
                                if **a == expected_neq && **b == expected_sim =>
                            {
                                (&**p1, &**p2)
                            }
                            _ => {
                                return Err(reject(
                                    path,
                                    "existential body does not have the (x≠V ∧ φ) ∨ (x∼V ∧ ψ) shape"
                                        .into(),
                                ))
                            }
                        };
                        let mut fresh_branch = path.clone();
                        fresh_branch.extend([Step::Body, Step::Left, Step::Right]);
                        let mut seen_branch = path.clone();
                        seen_branch.extend([Step::Body, Step::Right, Step::Right]);
                        deriv.exists_splits.insert(
                            path.clone(),
                            ExistsSplit {
                                var: x.clone(),
                                compare,
                                fresh_branch: fresh_branch.clone(),
                                seen_branch: Some(seen_branch.clone()),
                            },
                        );
                        // context entries for the connective scaffolding
                        path.push(Step::Body);
                        deriv
                            .contexts
                            .insert(path.clone(), (v.clone(), fset.with(x)));
                        path.push(Step::Left);
                        deriv
                            .contexts
                            .insert(path.clone(), (v.without(x), fset.with(x)));
                        path.push(Step::Right);
                        check_guarded_rec(phi1, &v.without(x), &fset.with(x), path, deriv)?;
                        path.pop();
                        path.pop();
                        path.push(Step::Right);
                        deriv
                            .contexts
                            .insert(path.clone(), (v.with(x), fset.with(x)));
                        path.push(Step::Right);
                        let out = check_guarded_rec(phi2, &v.with(x), &fset.with(x), path, deriv);
                        path.pop();
                        path.pop();
                        path.pop();
                        out
                    }
                    _ => Err(reject(
                        path,
                        "existential body does not have the (x≠V ∧ φ) ∨ (x∼V ∧ ψ) shape".into(),
                    )),
                }
            }
        }
    }
}

/// Decides membership in the guarded fragment parameterized by the
/// guarded-variable set V and free-variable set F (V ⊆ F). On acceptance
/// the derivation records the context of every node.
pub fn check_guarded(f: &Formula, v: &VarSet, fset: &VarSet) -> GuardedCheck {
    let mut deriv = GuardedDerivation::default();
    match check_guarded_rec(f, v, fset, &mut Vec::new(), &mut deriv) {
        Ok(()) => GuardedCheck {
            accepted: true,
            rejection: None,
            derivation: deriv,
        },
        Err(rej) => GuardedCheck {
            accepted: false,
            rejection: Some(rej),
            derivation: deriv,
        },
    }
}

/// Convenience entry point for closed formulas: `minHMLdG[∅, F]` with F
/// the formula's free data variables.
pub fn check_guarded_root(f: &Formula) -> GuardedCheck {
    let frees = VarSet::from_iter(f.free_data_vars());
    check_guarded(f, &VarSet::new(), &frees)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GdError {
    ContainsMax(Path),
    ContainsBox(Path),
    FreeRecVar(RecVar),
}

impl fmt::Display for GdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GdError::ContainsMax(p) => {
                write!(f, "gd input contains max at {}", path_string(p))
            }
            GdError::ContainsBox(p) => {
                write!(f, "gd input contains a necessity modality at {}", path_string(p))
            }
            GdError::FreeRecVar(x) => write!(f, "gd input has free recursion variable `{x}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GdError {}

type CtxKey = (Vec<DataVar>, Vec<DataVar>);

struct GdCx {
    binders: BTreeMap<RecVar, Formula>,
    names: BTreeMap<(RecVar, CtxKey), RecVar>,
    used_names: BTreeSet<String>,
    memo: BTreeMap<(RecVar, CtxKey, Vec<(RecVar, BTreeSet<CtxKey>)>), Formula>,
}

impl GdCx {
    fn indexed(&mut self, x: &RecVar, v: &VarSet, fset: &VarSet) -> RecVar {
        let key = (x.clone(), (v.sorted(), fset.sorted()));
        if let Some(n) = self.names.get(&key) {
            return n.clone();
        }
        let base = x.as_str();
        let mut candidate = String::from(base);
        let mut i = 1usize;
        while self.used_names.contains(&candidate) {
            candidate = format!("{base}{i}");
            i += 1;
        }
        self.used_names.insert(candidate.clone());
        let fresh = RecVar::new(&candidate);
        self.names.insert(key, fresh.clone());
        fresh
    }
}

type PiMap = BTreeMap<RecVar, BTreeSet<CtxKey>>;

fn gd_rec(
    f: &Formula,
    v: &VarSet,
    fset: &VarSet,
    pi: &PiMap,
    cx: &mut GdCx,
    path: &mut Path,
) -> Result<Formula, GdError> {
    match f {
        Formula::Tt => Ok(Formula::Tt),
        Formula::Ff => Ok(Formula::Ff),
        Formula::Max(_, _) => Err(GdError::ContainsMax(path.clone())),
        Formula::Box(_, _) => Err(GdError::ContainsBox(path.clone())),
        Formula::Var(x) => {
            let key: CtxKey = (v.sorted(), fset.sorted());
            if pi.get(x).is_some_and(|s| s.contains(&key)) {
                Ok(Formula::Var(cx.indexed(x, v, fset)))
            } else {
                let binder = cx
                    .binders
                    .get(x)
                    .cloned()
                    .ok_or_else(|| GdError::FreeRecVar(x.clone()))?;
                let relevant: Vec<(RecVar, BTreeSet<CtxKey>)> = binder
                    .free_rec_vars()
                    .into_iter()
                    .map(|y| (y.clone(), pi.get(&y).cloned().unwrap_or_default()))
                    .collect();
                let memo_key = (x.clone(), key, relevant);
                if let Some(done) = cx.memo.get(&memo_key) {
                    return Ok(done.clone());
                }
                let built = gd_rec(&binder, v, fset, pi, cx, path)?;
                cx.memo.insert(memo_key, built.clone());
                Ok(built)
            }
        }
        Formula::Min(x, body) => {
            let key: CtxKey = (v.sorted(), fset.sorted());
            let mut pi = pi.clone();
            pi.entry(x.clone()).or_default().insert(key);
            let name = cx.indexed(x, v, fset);
            path.push(Step::Body);
            let body = gd_rec(body, v, fset, &pi, cx, path)?;
            path.pop();
            Ok(Formula::Min(name, Box::new(body)))
        }
        Formula::Forall(x, body) => {
            path.push(Step::Body);
            let guard = gd_rec(body, &v.with(x), &fset.with(x), pi, cx, path)?;
            let main = gd_rec(body, &v.without(x), &fset.with(x), pi, cx, path)?;
            path.pop();
            Ok(Formula::GForall {
                guard: Box::new(guard),
                frees: fset.as_slice().to_vec(),
                var: x.clone(),
                body: Box::new(main),
            })
        }
        Formula::Exists(x, body) => {
            path.push(Step::Body);
            let fresh = gd_rec(body, &v.without(x), &fset.with(x), pi, cx, path)?;
            let seen = if v.without(x).is_empty() {
                Formula::Ff // x∼V is the empty disjunction
            } else {
                gd_rec(body, &v.with(x), &fset.with(x), pi, cx, path)?
            };
            path.pop();
            let compare: Vec<DataVar> = v.iter().filter(|y| *y != x).cloned().collect();
            let fresh_arm = Formula::and_smart(Formula::neq_set(x, &compare), fresh);
            let seen_arm = Formula::and_smart(Formula::sim_set(x, &compare), seen);
            Ok(Formula::Exists(
                x.clone(),
                Box::new(Formula::or_smart(fresh_arm, seen_arm)),
            ))
        }
        Formula::Diamond(b, body) => {
            let mut guard = b.clone();
            for x in v.iter() {
                guard = BExpr::and(guard, BExpr::neq(DataTerm::Var(x.clone()), DataTerm::Star));
            }
            path.push(Step::Body);
            let body = gd_rec(body, v, fset, pi, cx, path)?;
            path.pop();
            Ok(Formula::diamond(guard, body))
        }
        Formula::And(l, r) | Formula::Or(l, r) => {
            path.push(Step::Left);
            let lg = gd_rec(l, v, fset, pi, cx, path)?;
            path.pop();
            path.push(Step::Right);
            let rg = gd_rec(r, v, fset, pi, cx, path)?;
            path.pop();
            Ok(if matches!(f, Formula::And(_, _)) {
                Formula::and(lg, rg)
            } else {
                Formula::or(lg, rg)
            })
        }
        Formula::GForall { .. } => unreachable!("gforall desugared before gd"),
    }
}

fn collect_binders(f: &Formula, out: &mut BTreeMap<RecVar, Formula>) {
    if let Formula::Min(x, _) | Formula::Max(x, _) = f {
        out.insert(x.clone(), f.clone());
    }
    for (_, c) in f.children() {
        collect_binders(c, out);
    }
}

/// The guarding transformation at an explicit (V, F) context. The input
/// must be normalized (unique binding) and max-free; guarded universal
/// sugar is desugared first. The output is in `minHMLdG[V, F]`.
pub fn gd_at(f: &Formula, v: &VarSet, fset: &VarSet) -> Result<Formula, GdError> {
    let f = desugar_all(f);
    let mut binders = BTreeMap::new();
    collect_binders(&f, &mut binders);
    let mut cx = GdCx {
        binders,
        names: BTreeMap::new(),
        used_names: BTreeSet::new(),
        memo: BTreeMap::new(),
    };
    gd_rec(&f, v, fset, &BTreeMap::new(), &mut cx, &mut Vec::new())
}

/// `gd` for closed formulas: context (∅, free data vars).
pub fn gd(f: &Formula) -> Result<Formula, GdError> {
    let frees = VarSet::from_iter(f.free_data_vars());
    gd_at(f, &VarSet::new(), &frees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn leak() -> Formula {
        parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap()
    }

    fn dist() -> Formula {
        parse_formula(
            "exists x. <*=x> min X. <x=*> tt | \
             ((exists y. <*=y> min Y. <*=x> tt | <*!=x & *!=y> Y) & <*!=x> X)",
        )
        .unwrap()
    }

    #[test]
    fn classify_leak_is_disjunctive() {
        let report = classify(&leak());
        assert!(report.is_member(Fragment::DisjHmld));
        assert!(report.is_member(Fragment::CHmld));
        assert!(report.is_member(Fragment::MinHmld));
        assert!(report.is_member(Fragment::RecHmld));
        assert!(!report.is_member(Fragment::Hmld));
        assert!(!report.is_member(Fragment::SHmld));
    }

    #[test]
    fn classify_dist_is_conjunctive_chmld() {
        let report = classify(&dist());
        assert!(report.is_member(Fragment::CHmld));
        assert!(!report.is_member(Fragment::DisjHmld));
        // the witness for disjHMLd points at the conjunction
        let w = report.status(Fragment::DisjHmld).witness.as_ref().unwrap();
        assert!(!w.is_empty());
    }

    #[test]
    fn classify_tt() {
        let report = classify(&Formula::Tt);
        for frag in [
            Fragment::Hmld,
            Fragment::CHmld,
            Fragment::DisjHmld,
            Fragment::MinHmld,
            Fragment::RecHmld,
        ] {
            assert!(report.is_member(frag), "{frag}");
        }
        assert!(!report.is_member(Fragment::SHmld));
        assert!(!report.is_member(Fragment::ConjHmld));
        assert_eq!(
            report.status(Fragment::SHmld).witness,
            Some(Vec::new())
        );
    }

    #[test]
    fn fragment_hierarchy_is_monotone() {
        for text in [
            "tt",
            "ff",
            "exists x. <*=x><*=x> tt",
            "min X. <true> X | tt",
            "max X. [true] X",
            "exists x. <x=*> min X. <x=*> tt | <x!=*> X",
        ] {
            let f = parse_formula(text).unwrap();
            let r = classify(&f);
            if r.is_member(Fragment::DisjHmld) {
                assert!(r.is_member(Fragment::CHmld), "{text}");
            }
            if r.is_member(Fragment::CHmld) {
                assert!(r.is_member(Fragment::MinHmld), "{text}");
            }
            if r.is_member(Fragment::ConjHmld) {
                assert!(r.is_member(Fragment::SHmld), "{text}");
            }
            if r.is_member(Fragment::Hmld) {
                assert!(r.is_member(Fragment::MinHmld), "{text}");
            }
            assert!(r.is_member(Fragment::RecHmld), "{text}");
        }
    }

    #[test]
    fn desugar_gforall_empty_frees() {
        let guard = parse_formula("min X. <*!=x> X | <*=x> tt").unwrap();
        let body = parse_formula("<*=x> tt").unwrap();
        let x = DataVar::new("x");
        let out = desugar_gforall(&guard, &[], &x, &body);
        // F = ∅ so x≠F is tt and disappears: ∃x.γ ∧ ∀x.(γ ∨ φ)
        match &out {
            Formula::And(l, r) => {
                assert!(matches!(&**l, Formula::Exists(_, g) if **g == guard));
                match &**r {
                    Formula::Forall(_, or) => match &**or {
                        Formula::Or(g, b) => {
                            assert_eq!(**g, guard);
                            assert_eq!(**b, body);
                        }
                        other => panic!("unexpected: {other:?}"),
                    },
                    other => panic!("unexpected: {other:?}"),
                }
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn desugar_gforall_self_free_collapses() {
        // F = {x}: x≠F is the empty conjunction, i.e. tt
        let x = DataVar::new("x");
        let out = desugar_gforall(&Formula::Tt, core::slice::from_ref(&x), &x, &Formula::Ff);
        match &out {
            Formula::And(l, _) => assert!(matches!(&**l, Formula::Exists(_, g) if **g == Formula::Tt)),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn bare_forall_is_not_guarded() {
        let f = parse_formula("forall x. min X. <*=x> tt | <*!=x> X").unwrap();
        let check = check_guarded_root(&f);
        assert!(!check.accepted);
        assert!(check.rejection.unwrap().reason.contains("bare universal"));
    }

    #[test]
    fn tt_is_guarded_everywhere() {
        let v = VarSet::from_iter([DataVar::new("a")]);
        let f = VarSet::from_iter([DataVar::new("a"), DataVar::new("b")]);
        assert!(check_guarded(&Formula::Tt, &v, &f).accepted);
        assert!(check_guarded(&Formula::Tt, &VarSet::new(), &VarSet::new()).accepted);
    }

    #[test]
    fn chmld_formulas_are_guarded_with_empty_v() {
        assert!(check_guarded_root(&leak()).accepted);
        assert!(check_guarded_root(&dist()).accepted);
    }

    #[test]
    fn gd_of_tt_is_tt() {
        assert_eq!(gd(&Formula::Tt).unwrap(), Formula::Tt);
    }

    #[test]
    fn gd_is_identity_on_chmld_shapes() {
        // V stays empty on cHMLd input, so gd only rebuilds the formula
        let f = leak();
        let out = gd(&f).unwrap();
        assert!(crate::norm::alpha_eq(&out, &f));
        assert!(check_guarded_root(&out).accepted);
    }

    #[test]
    fn gd_guards_bare_forall() {
        let f = parse_formula("forall x. min X. <*=x> tt | <true> X").unwrap();
        let out = gd(&f).unwrap();
        let check = check_guarded_root(&out);
        assert!(check.accepted, "{:?}", check.rejection);
        match &out {
            Formula::GForall { guard, frees, .. } => {
                assert!(frees.is_empty());
                // the guard is the (V=x, F=x)-copy: its diamonds must carry *!=x
                let rendered = crate::render::render_formula(guard);
                assert!(rendered.contains("x!=*"), "guard: {rendered}");
            }
            other => panic!("expected gforall at root: {other:?}"),
        }
    }

    #[test]
    fn gd_output_passes_check_guarded_on_mixed_input() {
        let f = parse_formula(
            "forall x. min X. (<*=x> tt | <true> X) & exists y. min Y. <*=y> tt | <*!=y> Y",
        )
        .unwrap();
        let f = crate::norm::normalize(&f).unwrap().formula;
        let out = gd(&f).unwrap();
        let check = check_guarded_root(&out);
        assert!(check.accepted, "{:?}", check.rejection);
    }

    #[test]
    fn gd_rejects_max() {
        let f = parse_formula("max X. [true] X").unwrap();
        assert!(matches!(gd(&f), Err(GdError::ContainsMax(_))));
    }
}
