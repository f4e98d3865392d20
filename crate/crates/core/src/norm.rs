//! Alpha-conversion, unique-binding normalization, fixed-point unfolding
//! and De Morgan dualization.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{BExpr, DataTerm, DataVar, Formula, RecVar};

/// Renames free occurrences of the recursion variable `old` to `new`.
fn rename_rec(f: &Formula, old: &RecVar, new: &RecVar) -> Formula {
    match f {
        Formula::Var(x) if x == old => Formula::Var(new.clone()),
        Formula::Min(x, _) | Formula::Max(x, _) if x == old => f.clone(),
        _ => map_children(f, |c| rename_rec(c, old, new)),
    }
}

/// Renames free occurrences of the data variable `old` to `new`.
fn rename_data(f: &Formula, old: &DataVar, new: &DataVar) -> Formula {
    let fix_bexpr = |b: &BExpr| rename_data_bexpr(b, old, new);
    match f {
        Formula::Diamond(b, body) => Formula::diamond(fix_bexpr(b), rename_data(body, old, new)),
        Formula::Box(b, body) => Formula::box_mod(fix_bexpr(b), rename_data(body, old, new)),
        Formula::Exists(x, _) | Formula::Forall(x, _) if x == old => f.clone(),
        Formula::GForall {
            guard,
            frees,
            var,
            body,
        } => {
            let frees = frees
                .iter()
                .map(|v| if v == old { new.clone() } else { v.clone() })
                .collect();
            if var == old {
                Formula::GForall {
                    guard: guard.clone(),
                    frees,
                    var: var.clone(),
                    body: body.clone(),
                }
            } else {
                Formula::GForall {
                    guard: Box::new(rename_data(guard, old, new)),
                    frees,
                    var: var.clone(),
                    body: Box::new(rename_data(body, old, new)),
                }
            }
        }
        _ => map_children(f, |c| rename_data(c, old, new)),
    }
}

fn rename_data_bexpr(b: &BExpr, old: &DataVar, new: &DataVar) -> BExpr {
    let fix_term = |t: &DataTerm| match t {
        DataTerm::Var(x) if x == old => DataTerm::Var(new.clone()),
        other => other.clone(),
    };
    match b {
        BExpr::True => BExpr::True,
        BExpr::Eq(l, r) => BExpr::Eq(fix_term(l), fix_term(r)),
        BExpr::Not(inner) => BExpr::not(rename_data_bexpr(inner, old, new)),
        BExpr::And(l, r) => BExpr::and(
            rename_data_bexpr(l, old, new),
            rename_data_bexpr(r, old, new),
        ),
    }
}

fn map_children(f: &Formula, mut g: impl FnMut(&Formula) -> Formula) -> Formula {
    match f {
        Formula::Tt => Formula::Tt,
        Formula::Ff => Formula::Ff,
        Formula::Var(x) => Formula::Var(x.clone()),
        Formula::Diamond(b, body) => Formula::diamond(b.clone(), g(body)),
        Formula::Box(b, body) => Formula::box_mod(b.clone(), g(body)),
        Formula::Exists(x, body) => Formula::Exists(x.clone(), Box::new(g(body))),
        Formula::Forall(x, body) => Formula::Forall(x.clone(), Box::new(g(body))),
        Formula::Or(l, r) => Formula::or(g(l), g(r)),
        Formula::And(l, r) => Formula::and(g(l), g(r)),
        Formula::Min(x, body) => Formula::Min(x.clone(), Box::new(g(body))),
        Formula::Max(x, body) => Formula::Max(x.clone(), Box::new(g(body))),
        Formula::GForall {
            guard,
            frees,
            var,
            body,
        } => Formula::GForall {
            guard: Box::new(g(guard)),
            frees: frees.clone(),
            var: var.clone(),
            body: Box::new(g(body)),
        },
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem: String = base
        .trim_end_matches(|c: char| c.is_ascii_digit())
        .to_string();
    let stem = if stem.is_empty() { base.to_string() } else { stem };
    let mut i = 1usize;
    loop {
        let cand = format!("{stem}{i}");
        if !avoid.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Capture-avoiding substitution of `rep` for the free recursion variable `x`.
pub fn subst_rec(f: &Formula, x: &RecVar, rep: &Formula) -> Formula {
    let rep_free_rec: BTreeSet<RecVar> = rep.free_rec_vars();
    let rep_free_data: Vec<DataVar> = rep.free_data_vars();
    subst_rec_inner(f, x, rep, &rep_free_rec, &rep_free_data)
}

fn subst_rec_inner(
    f: &Formula,
    x: &RecVar,
    rep: &Formula,
    rep_free_rec: &BTreeSet<RecVar>,
    rep_free_data: &[DataVar],
) -> Formula {
    match f {
        Formula::Var(y) if y == x => rep.clone(),
        Formula::Min(y, _) | Formula::Max(y, _) if y == x => f.clone(),
        Formula::Min(y, body) | Formula::Max(y, body) if rep_free_rec.contains(y) => {
            // binder would capture a recursion variable of the replacement
            let mut avoid: BTreeSet<String> = rep_free_rec.iter().map(|v| v.as_str().to_string()).collect();
            for v in f.free_rec_vars() {
                avoid.insert(v.as_str().to_string());
            }
            avoid.insert(y.as_str().to_string());
            let fresh = RecVar::new(&fresh_name(y.as_str(), &avoid));
            let renamed = rename_rec(body, y, &fresh);
            let new_body = subst_rec_inner(&renamed, x, rep, rep_free_rec, rep_free_data);
            if matches!(f, Formula::Min(_, _)) {
                Formula::Min(fresh, Box::new(new_body))
            } else {
                Formula::Max(fresh, Box::new(new_body))
            }
        }
        Formula::Exists(y, body) | Formula::Forall(y, body) if rep_free_data.contains(y) => {
            let mut avoid: BTreeSet<String> = rep_free_data.iter().map(|v| v.as_str().to_string()).collect();
            for v in f.free_data_vars() {
                avoid.insert(v.as_str().to_string());
            }
            for v in f.all_data_vars() {
                avoid.insert(v.as_str().to_string());
            }
            let fresh = DataVar::new(&fresh_name(y.as_str(), &avoid));
            let renamed = rename_data(body, y, &fresh);
            let new_body = subst_rec_inner(&renamed, x, rep, rep_free_rec, rep_free_data);
            if matches!(f, Formula::Exists(_, _)) {
                Formula::Exists(fresh, Box::new(new_body))
            } else {
                Formula::Forall(fresh, Box::new(new_body))
            }
        }
        _ => map_children(f, |c| subst_rec_inner(c, x, rep, rep_free_rec, rep_free_data)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnfoldError {
    NotAFixpoint,
}

impl fmt::Display for UnfoldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unfold expects a min or max formula")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for UnfoldError {}

/// One step of the fixed-point equation: `min X.φ ↦ φ[min X.φ / X]`
/// (and the same for `max`).
pub fn unfold(fix: &Formula) -> Result<Formula, UnfoldError> {
    match fix {
        Formula::Min(x, body) | Formula::Max(x, body) => Ok(subst_rec(body, x, fix)),
        _ => Err(UnfoldError::NotAFixpoint),
    }
}

/// Result of unique-binding normalization.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub formula: Formula,
    /// Recursion variables (post-renaming) with at least one occurrence
    /// not under a modal operator inside their fixed point.
    pub modal_unguarded: Vec<RecVar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalizeError {
    FreeRecVar(RecVar),
}

impl fmt::Display for NormalizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizeError::FreeRecVar(x) => {
                write!(f, "free recursion variable `{x}` in a formula declared closed")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NormalizeError {}

struct Normalizer {
    used_data: BTreeSet<String>,
    used_rec: BTreeSet<String>,
}

impl Normalizer {
    fn fresh_data(&mut self, base: &DataVar) -> DataVar {
        let name = fresh_name(base.as_str(), &self.used_data);
        self.used_data.insert(name.clone());
        DataVar::new(&name)
    }

    fn fresh_rec(&mut self, base: &RecVar) -> RecVar {
        let name = fresh_name(base.as_str(), &self.used_rec);
        self.used_rec.insert(name.clone());
        RecVar::new(&name)
    }

    fn walk(
        &mut self,
        f: &Formula,
        data_scope: &mut Vec<(DataVar, DataVar)>,
        rec_scope: &mut Vec<(RecVar, RecVar)>,
    ) -> Result<Formula, NormalizeError> {
        let lookup_data = |scope: &Vec<(DataVar, DataVar)>, x: &DataVar| -> DataVar {
            scope
                .iter()
                .rev()
                .find(|(o, _)| o == x)
                .map(|(_, n)| n.clone())
                .unwrap_or_else(|| x.clone())
        };
        let fix_bexpr = |scope: &Vec<(DataVar, DataVar)>, b: &BExpr| -> BExpr {
            fn go(b: &BExpr, scope: &Vec<(DataVar, DataVar)>) -> BExpr {
                let fix_term = |t: &DataTerm| match t {
                    DataTerm::Var(x) => DataTerm::Var(
                        scope
                            .iter()
                            .rev()
                            .find(|(o, _)| o == x)
                            .map(|(_, n)| n.clone())
                            .unwrap_or_else(|| x.clone()),
                    ),
                    DataTerm::Star => DataTerm::Star,
                };
                match b {
                    BExpr::True => BExpr::True,
                    BExpr::Eq(l, r) => BExpr::Eq(fix_term(l), fix_term(r)),
                    BExpr::Not(inner) => BExpr::not(go(inner, scope)),
                    BExpr::And(l, r) => BExpr::and(go(l, scope), go(r, scope)),
                }
            }
            go(b, scope)
        };
        match f {
            Formula::Tt => Ok(Formula::Tt),
            Formula::Ff => Ok(Formula::Ff),
            Formula::Var(x) => {
                let renamed = rec_scope
                    .iter()
                    .rev()
                    .find(|(o, _)| o == x)
                    .map(|(_, n)| n.clone())
                    .ok_or_else(|| NormalizeError::FreeRecVar(x.clone()))?;
                Ok(Formula::Var(renamed))
            }
            Formula::Diamond(b, body) => Ok(Formula::diamond(
                fix_bexpr(data_scope, b),
                self.walk(body, data_scope, rec_scope)?,
            )),
            Formula::Box(b, body) => Ok(Formula::box_mod(
                fix_bexpr(data_scope, b),
                self.walk(body, data_scope, rec_scope)?,
            )),
            Formula::Exists(x, body) | Formula::Forall(x, body) => {
                let new = self.fresh_data(x);
                data_scope.push((x.clone(), new.clone()));
                let body = self.walk(body, data_scope, rec_scope)?;
                data_scope.pop();
                Ok(if matches!(f, Formula::Exists(_, _)) {
                    Formula::Exists(new, Box::new(body))
                } else {
                    Formula::Forall(new, Box::new(body))
                })
            }
            Formula::Or(l, r) => Ok(Formula::or(
                self.walk(l, data_scope, rec_scope)?,
                self.walk(r, data_scope, rec_scope)?,
            )),
            Formula::And(l, r) => Ok(Formula::and(
                self.walk(l, data_scope, rec_scope)?,
                self.walk(r, data_scope, rec_scope)?,
            )),
            Formula::Min(x, body) | Formula::Max(x, body) => {
                let new = self.fresh_rec(x);
                rec_scope.push((x.clone(), new.clone()));
                let body = self.walk(body, data_scope, rec_scope)?;
                rec_scope.pop();
                Ok(if matches!(f, Formula::Min(_, _)) {
                    Formula::Min(new, Box::new(body))
                } else {
                    Formula::Max(new, Box::new(body))
                })
            }
            Formula::GForall {
                guard,
                frees,
                var,
                body,
            } => {
                let frees = frees.iter().map(|v| lookup_data(data_scope, v)).collect();
                let new = self.fresh_data(var);
                data_scope.push((var.clone(), new.clone()));
                let guard = self.walk(guard, data_scope, rec_scope)?;
                let body = self.walk(body, data_scope, rec_scope)?;
                data_scope.pop();
                Ok(Formula::GForall {
                    guard: Box::new(guard),
                    frees,
                    var: new,
                    body: Box::new(body),
                })
            }
        }
    }
}

/// Collects fixed points whose variable has an occurrence outside the
/// scope of any modal operator within its own body.
fn modal_unguarded_vars(f: &Formula, out: &mut Vec<RecVar>) {
    if let Formula::Min(x, body) | Formula::Max(x, body) = f {
        if occurs_unguarded(body, x) && !out.contains(x) {
            out.push(x.clone());
        }
    }
    for (_, c) in f.children() {
        modal_unguarded_vars(c, out);
    }
}

fn occurs_unguarded(f: &Formula, x: &RecVar) -> bool {
    match f {
        Formula::Var(y) => y == x,
        Formula::Diamond(_, _) | Formula::Box(_, _) => false,
        Formula::Min(y, _) | Formula::Max(y, _) if y == x => false,
        _ => f.children().iter().any(|(_, c)| occurs_unguarded(c, x)),
    }
}

/// Alpha-renames so every data and recursion variable is bound at most
/// once and never shadows a free variable. Modal guardedness violations
/// are reported as warnings, not errors; a free recursion variable is an
/// error.
pub fn normalize(f: &Formula) -> Result<Normalized, NormalizeError> {
    let mut norm = Normalizer {
        used_data: f
            .free_data_vars()
            .iter()
            .map(|v| v.as_str().to_string())
            .collect(),
        used_rec: BTreeSet::new(),
    };
    let formula = norm.walk(f, &mut Vec::new(), &mut Vec::new())?;
    let mut modal_unguarded = Vec::new();
    modal_unguarded_vars(&formula, &mut modal_unguarded);
    Ok(Normalized {
        formula,
        modal_unguarded,
    })
}

/// Structural equality up to consistent renaming of bound variables.
pub fn alpha_eq(f: &Formula, g: &Formula) -> bool {
    alpha_eq_inner(f, g, &mut Vec::new(), &mut Vec::new())
}

fn alpha_eq_inner(
    f: &Formula,
    g: &Formula,
    data: &mut Vec<(DataVar, DataVar)>,
    rec: &mut Vec<(RecVar, RecVar)>,
) -> bool {
    let data_match = |data: &Vec<(DataVar, DataVar)>, a: &DataVar, b: &DataVar| -> bool {
        for (l, r) in data.iter().rev() {
            if l == a || r == b {
                return l == a && r == b;
            }
        }
        a == b
    };
    let term_match = |data: &Vec<(DataVar, DataVar)>, a: &DataTerm, b: &DataTerm| -> bool {
        match (a, b) {
            (DataTerm::Star, DataTerm::Star) => true,
            (DataTerm::Var(x), DataTerm::Var(y)) => data_match(data, x, y),
            _ => false,
        }
    };
    fn bexpr_match(
        a: &BExpr,
        b: &BExpr,
        data: &Vec<(DataVar, DataVar)>,
        term_match: &impl Fn(&Vec<(DataVar, DataVar)>, &DataTerm, &DataTerm) -> bool,
    ) -> bool {
        match (a, b) {
            (BExpr::True, BExpr::True) => true,
            (BExpr::Eq(l1, r1), BExpr::Eq(l2, r2)) => {
                term_match(data, l1, l2) && term_match(data, r1, r2)
            }
            (BExpr::Not(x), BExpr::Not(y)) => bexpr_match(x, y, data, term_match),
            (BExpr::And(l1, r1), BExpr::And(l2, r2)) => {
                bexpr_match(l1, l2, data, term_match) && bexpr_match(r1, r2, data, term_match)
            }
            _ => false,
        }
    }
    match (f, g) {
        (Formula::Tt, Formula::Tt) | (Formula::Ff, Formula::Ff) => true,
        (Formula::Var(x), Formula::Var(y)) => {
            for (l, r) in rec.iter().rev() {
                if l == x || r == y {
                    return l == x && r == y;
                }
            }
            x == y
        }
        (Formula::Diamond(b1, f1), Formula::Diamond(b2, f2))
        | (Formula::Box(b1, f1), Formula::Box(b2, f2))
            if core::mem::discriminant(f) == core::mem::discriminant(g) =>
        {
            bexpr_match(b1, b2, data, &term_match) && alpha_eq_inner(f1, f2, data, rec)
        }
        (Formula::Exists(x, f1), Formula::Exists(y, f2))
        | (Formula::Forall(x, f1), Formula::Forall(y, f2))
            if core::mem::discriminant(f) == core::mem::discriminant(g) =>
        {
            data.push((x.clone(), y.clone()));
            let ok = alpha_eq_inner(f1, f2, data, rec);
            data.pop();
            ok
        }
        (Formula::Or(l1, r1), Formula::Or(l2, r2)) | (Formula::And(l1, r1), Formula::And(l2, r2))
            if core::mem::discriminant(f) == core::mem::discriminant(g) =>
        {
            alpha_eq_inner(l1, l2, data, rec) && alpha_eq_inner(r1, r2, data, rec)
        }
        (Formula::Min(x, f1), Formula::Min(y, f2)) | (Formula::Max(x, f1), Formula::Max(y, f2))
            if core::mem::discriminant(f) == core::mem::discriminant(g) =>
        {
            rec.push((x.clone(), y.clone()));
            let ok = alpha_eq_inner(f1, f2, data, rec);
            rec.pop();
            ok
        }
        (
            Formula::GForall {
                guard: g1,
                frees: fr1,
                var: x,
                body: b1,
            },
            Formula::GForall {
                guard: g2,
                frees: fr2,
                var: y,
                body: b2,
            },
        ) => {
            if fr1.len() != fr2.len() {
                return false;
            }
            if !fr1
                .iter()
                .zip(fr2.iter())
                .all(|(a, b)| data_match(data, a, b))
            {
                return false;
            }
            data.push((x.clone(), y.clone()));
            let ok = alpha_eq_inner(g1, g2, data, rec) && alpha_eq_inner(b1, b2, data, rec);
            data.pop();
            ok
        }
        _ => false,
    }
}

/// Structural De Morgan dual: tt↔ff, ⟨b⟩↔[b], ∃↔∀, ∨↔∧, min↔max.
/// Guarded quantifiers are desugared first. On any infinite trace, a trace
/// satisfies the dual exactly when it violates the original closed formula.
pub fn dualize(f: &Formula) -> Formula {
    let f = crate::fragments::desugar_all(f);
    dualize_inner(&f)
}

fn dualize_inner(f: &Formula) -> Formula {
    match f {
        Formula::Tt => Formula::Ff,
        Formula::Ff => Formula::Tt,
        Formula::Diamond(b, body) => Formula::box_mod(b.clone(), dualize_inner(body)),
        Formula::Box(b, body) => Formula::diamond(b.clone(), dualize_inner(body)),
        Formula::Exists(x, body) => Formula::Forall(x.clone(), Box::new(dualize_inner(body))),
        Formula::Forall(x, body) => Formula::Exists(x.clone(), Box::new(dualize_inner(body))),
        Formula::Or(l, r) => Formula::and(dualize_inner(l), dualize_inner(r)),
        Formula::And(l, r) => Formula::or(dualize_inner(l), dualize_inner(r)),
        Formula::Min(x, body) => Formula::Max(x.clone(), Box::new(dualize_inner(body))),
        Formula::Max(x, body) => Formula::Min(x.clone(), Box::new(dualize_inner(body))),
        Formula::Var(x) => Formula::Var(x.clone()),
        Formula::GForall { .. } => unreachable!("gforall desugared before dualization"),
    }
}
