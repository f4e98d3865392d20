//! Monitor terms, the compositional synthesis from the least-fixpoint
//! fragment, and their concrete syntax.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{path_string, BExpr, DataVar, Formula, Path, RecVar};
use crate::fragments::{classify, Fragment};
use crate::norm::normalize;

/// Monitor syntax: verdicts, guard and guess prefixes, parallel sum and
/// product, and recursion.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Monitor {
    Yes,
    End,
    Guard(BExpr, Box<Monitor>),
    Guess(DataVar, Box<Monitor>),
    ParOr(Box<Monitor>, Box<Monitor>),
    ParAnd(Box<Monitor>, Box<Monitor>),
    Rec(RecVar, Box<Monitor>),
    Var(RecVar),
}

impl Monitor {
    pub fn guard(b: BExpr, m: Monitor) -> Monitor {
        Monitor::Guard(b, Box::new(m))
    }

    pub fn guess(x: impl Into<DataVar>, m: Monitor) -> Monitor {
        Monitor::Guess(x.into(), Box::new(m))
    }

    pub fn par_or(l: Monitor, r: Monitor) -> Monitor {
        Monitor::ParOr(Box::new(l), Box::new(r))
    }

    pub fn par_and(l: Monitor, r: Monitor) -> Monitor {
        Monitor::ParAnd(Box::new(l), Box::new(r))
    }

    pub fn rec(x: impl Into<RecVar>, m: Monitor) -> Monitor {
        Monitor::Rec(x.into(), Box::new(m))
    }

    pub fn rec_var(x: impl Into<RecVar>) -> Monitor {
        Monitor::Var(x.into())
    }

    pub fn children(&self) -> Vec<&Monitor> {
        match self {
            Monitor::Yes | Monitor::End | Monitor::Var(_) => Vec::new(),
            Monitor::Guard(_, m) | Monitor::Guess(_, m) | Monitor::Rec(_, m) => alloc::vec![&**m],
            Monitor::ParOr(l, r) | Monitor::ParAnd(l, r) => alloc::vec![&**l, &**r],
        }
    }

    /// Data variables occurring anywhere (in guesses or guards).
    pub fn data_vars(&self) -> Vec<DataVar> {
        let mut out = Vec::new();
        fn go(m: &Monitor, out: &mut Vec<DataVar>) {
            match m {
                Monitor::Guard(b, inner) => {
                    for v in b.vars() {
                        if !out.contains(&v) {
                            out.push(v);
                        }
                    }
                    go(inner, out);
                }
                Monitor::Guess(x, inner) => {
                    if !out.contains(x) {
                        out.push(x.clone());
                    }
                    go(inner, out);
                }
                _ => {
                    for c in m.children() {
                        go(c, out);
                    }
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn free_rec_vars(&self) -> BTreeSet<RecVar> {
        let mut out = BTreeSet::new();
        fn go(m: &Monitor, bound: &mut Vec<RecVar>, out: &mut BTreeSet<RecVar>) {
            match m {
                Monitor::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Monitor::Rec(x, inner) => {
                    bound.push(x.clone());
                    go(inner, bound, out);
                    bound.pop();
                }
                _ => {
                    for c in m.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_rec_vars().is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

/// Substitutes `rep` for free occurrences of the recursion variable `x`.
/// Monitors use unique recursion binders (synthesis and the automaton
/// translation both guarantee it), so no renaming is needed.
pub fn subst_rec_monitor(m: &Monitor, x: &RecVar, rep: &Monitor) -> Monitor {
    match m {
        Monitor::Var(y) if y == x => rep.clone(),
        Monitor::Yes | Monitor::End | Monitor::Var(_) => m.clone(),
        Monitor::Rec(y, _) if y == x => m.clone(),
        Monitor::Guard(b, inner) => Monitor::guard(b.clone(), subst_rec_monitor(inner, x, rep)),
        Monitor::Guess(y, inner) => {
            Monitor::Guess(y.clone(), Box::new(subst_rec_monitor(inner, x, rep)))
        }
        Monitor::ParOr(l, r) => {
            Monitor::par_or(subst_rec_monitor(l, x, rep), subst_rec_monitor(r, x, rep))
        }
        Monitor::ParAnd(l, r) => {
            Monitor::par_and(subst_rec_monitor(l, x, rep), subst_rec_monitor(r, x, rep))
        }
        Monitor::Rec(y, inner) => {
            Monitor::Rec(y.clone(), Box::new(subst_rec_monitor(inner, x, rep)))
        }
    }
}

/// A recursion that can unfold to one of its own unfolding sites without
/// crossing a guard prefix diverges under τ. Detects such cycles.
pub fn tau_divergent(m: &Monitor) -> Option<RecVar> {
    // edges X -> Y whenever Var(Y) occurs in the body of rec X without an
    // intervening guard prefix
    fn unguarded_vars(m: &Monitor, out: &mut BTreeSet<RecVar>) {
        match m {
            Monitor::Var(y) => {
                out.insert(y.clone());
            }
            Monitor::Guard(_, _) => {}
            _ => {
                for c in m.children() {
                    unguarded_vars(c, out);
                }
            }
        }
    }
    let mut edges: alloc::collections::BTreeMap<RecVar, BTreeSet<RecVar>> = Default::default();
    fn collect(m: &Monitor, edges: &mut alloc::collections::BTreeMap<RecVar, BTreeSet<RecVar>>) {
        if let Monitor::Rec(x, body) = m {
            let mut targets = BTreeSet::new();
            unguarded_vars(body, &mut targets);
            edges.entry(x.clone()).or_default().extend(targets);
        }
        for c in m.children() {
            collect(c, edges);
        }
    }
    collect(m, &mut edges);
    // cycle detection over the unguarded-unfold graph
    let vars: Vec<RecVar> = edges.keys().cloned().collect();
    for start in &vars {
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![start.clone()];
        while let Some(v) = stack.pop() {
            if let Some(next) = edges.get(&v) {
                for n in next {
                    if n == start {
                        return Some(start.clone());
                    }
                    if seen.insert(n.clone()) {
                        stack.push(n.clone());
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SynthesisError {
    /// The formula steps outside the least-fixpoint fragment; the path
    /// points at the first offending node.
    NotInFragment(Path),
    NotModallyGuarded(RecVar),
    Normalize(crate::norm::NormalizeError),
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisError::NotInFragment(p) => write!(
                f,
                "synthesis requires a cHMLd formula; offending node at {}",
                path_string(p)
            ),
            SynthesisError::NotModallyGuarded(x) => write!(
                f,
                "recursion variable `{x}` is not modally guarded in its fixed point"
            ),
            SynthesisError::Normalize(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SynthesisError {}

/// The compositional synthesis: tt ↦ yes, ⟨b⟩ ↦ guard prefix, ∃ ↦ guess,
/// ∨ ↦ ⊕, ∧ ↦ ⊗, min ↦ rec. The input is normalized first; it must be
/// closed, in the least-fixpoint fragment, and modally guarded.
pub fn synthesize(f: &Formula) -> Result<Monitor, SynthesisError> {
    let normalized = normalize(f).map_err(SynthesisError::Normalize)?;
    if let Some(x) = normalized.modal_unguarded.first() {
        return Err(SynthesisError::NotModallyGuarded(x.clone()));
    }
    let report = classify(&normalized.formula);
    if !report.is_member(Fragment::CHmld) {
        let witness = report
            .status(Fragment::CHmld)
            .witness
            .clone()
            .unwrap_or_default();
        return Err(SynthesisError::NotInFragment(witness));
    }
    Ok(synthesize_rec(&normalized.formula))
}

fn synthesize_rec(f: &Formula) -> Monitor {
    match f {
        Formula::Tt => Monitor::Yes,
        Formula::Diamond(b, body) => Monitor::guard(b.clone(), synthesize_rec(body)),
        Formula::Exists(x, body) => Monitor::Guess(x.clone(), Box::new(synthesize_rec(body))),
        Formula::Or(l, r) => Monitor::par_or(synthesize_rec(l), synthesize_rec(r)),
        Formula::And(l, r) => Monitor::par_and(synthesize_rec(l), synthesize_rec(r)),
        Formula::Min(x, body) => Monitor::Rec(x.clone(), Box::new(synthesize_rec(body))),
        Formula::Var(x) => Monitor::Var(x.clone()),
        _ => unreachable!("fragment checked before synthesis"),
    }
}

fn render_prec(m: &Monitor, min_prec: u8, followed: bool, out: &mut String) {
    match m {
        Monitor::Yes => out.push_str("yes"),
        Monitor::End => out.push_str("end"),
        Monitor::Var(x) => out.push_str(x.as_str()),
        Monitor::Guard(b, inner) => {
            out.push('(');
            out.push_str(&crate::render::render_bexpr(b));
            out.push_str(").");
            render_prec(inner, 3, followed, out);
        }
        Monitor::Guess(x, inner) => {
            let _ = core::fmt::Write::write_fmt(out, format_args!("guess {x}. "));
            render_prec(inner, 3, followed, out);
        }
        Monitor::Rec(x, inner) => {
            let parens = followed;
            if parens {
                out.push('(');
            }
            let _ = core::fmt::Write::write_fmt(out, format_args!("rec {x}. "));
            render_prec(inner, 1, false, out);
            if parens {
                out.push(')');
            }
        }
        Monitor::ParOr(l, r) => {
            let parens = min_prec > 1;
            if parens {
                out.push('(');
            }
            render_prec(l, 1, true, out);
            out.push_str(" | ");
            render_prec(r, 2, if parens { false } else { followed }, out);
            if parens {
                out.push(')');
            }
        }
        Monitor::ParAnd(l, r) => {
            let parens = min_prec > 2;
            if parens {
                out.push('(');
            }
            render_prec(l, 2, true, out);
            out.push_str(" & ");
            render_prec(r, 3, if parens { false } else { followed }, out);
            if parens {
                out.push(')');
            }
        }
    }
}

/// Renders a monitor to its concrete syntax (⊕ printed `|`, ⊗ printed `&`).
pub fn render_monitor(m: &Monitor) -> String {
    let mut out = String::new();
    render_prec(m, 1, false, &mut out);
    out
}

pub use crate::parse::parse_monitor;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn leak() -> Formula {
        parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap()
    }

    #[test]
    fn synthesize_tt_is_yes() {
        assert_eq!(synthesize(&Formula::Tt).unwrap(), Monitor::Yes);
    }

    #[test]
    fn synthesize_leak_matches_paper_shape() {
        let m = synthesize(&leak()).unwrap();
        let expected = parse_monitor("guess x. (x=*). rec X. (x=*). yes | (x!=*). X").unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn synthesize_dist_shape() {
        let dist = parse_formula(
            "exists x. <*=x> min X. <x=*> tt | \
             ((exists y. <*=y> min Y. <*=x> tt | <*!=x & *!=y> Y) & <*!=x> X)",
        )
        .unwrap();
        let m = synthesize(&dist).unwrap();
        // nested rec, one parallel product, two guesses
        fn count(m: &Monitor, pred: &dyn Fn(&Monitor) -> bool) -> usize {
            let own = usize::from(pred(m));
            own + m.children().iter().map(|c| count(c, pred)).sum::<usize>()
        }
        assert_eq!(count(&m, &|m| matches!(m, Monitor::Rec(_, _))), 2);
        assert_eq!(count(&m, &|m| matches!(m, Monitor::ParAnd(_, _))), 1);
        assert_eq!(count(&m, &|m| matches!(m, Monitor::Guess(_, _))), 2);
    }

    #[test]
    fn synthesize_rejects_box() {
        let f = parse_formula("[true] tt").unwrap();
        assert!(matches!(
            synthesize(&f),
            Err(SynthesisError::NotInFragment(_))
        ));
    }

    #[test]
    fn synthesize_rejects_unguarded_fixpoint() {
        let f = parse_formula("min X. X | <true> X").unwrap();
        assert!(matches!(
            synthesize(&f),
            Err(SynthesisError::NotModallyGuarded(_))
        ));
    }

    #[test]
    fn monitor_syntax_roundtrip() {
        for text in [
            "yes",
            "end",
            "guess x. (x=*). yes",
            "guess x. (x=*). rec X. (x=*). yes | (x!=*). X",
            "(true). yes & (x!=y). end",
            "rec X. ((a=*). X | yes) & yes",
        ] {
            let m = parse_monitor(text).unwrap();
            let rendered = render_monitor(&m);
            let again = parse_monitor(&rendered)
                .unwrap_or_else(|e| panic!("re-parse of `{rendered}`: {e}"));
            assert_eq!(m, again, "round-trip through `{rendered}`");
        }
    }

    #[test]
    fn tau_divergence_detection() {
        // rec X. X diverges, rec X. (b). X does not
        let bad = Monitor::rec("X", Monitor::rec_var("X"));
        assert!(tau_divergent(&bad).is_some());
        let good = Monitor::rec("X", Monitor::guard(BExpr::True, Monitor::rec_var("X")));
        assert!(tau_divergent(&good).is_none());
        // an unguarded occurrence beside a guarded one still diverges
        let mixed = Monitor::rec(
            "X",
            Monitor::par_or(
                Monitor::guard(BExpr::True, Monitor::rec_var("X")),
                Monitor::rec_var("X"),
            ),
        );
        assert!(tau_divergent(&mixed).is_some());
        // bare cross-references without cycles are fine
        let chain = Monitor::rec(
            "X",
            Monitor::guard(
                BExpr::True,
                Monitor::rec(
                    "Y",
                    Monitor::par_or(Monitor::rec_var("X"), Monitor::guard(BExpr::True, Monitor::rec_var("Y"))),
                ),
            ),
        );
        assert!(tau_divergent(&chain).is_none());
    }
}
