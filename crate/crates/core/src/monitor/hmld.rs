//! Two-verdict monitoring for the recursion-free fragment.
//!
//! A recursion-free formula of modal height n has bounded discriminating
//! prefixes: every length-n prefix is either good or bad. The classifier
//! buffers exactly n events and then decides by evaluating the formula
//! over the stored prefix — the continuation cannot matter, so it is
//! modeled by one fresh value looping forever.

use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{path_string, DataEnv, DataValue, Formula, Path};
use crate::budget::Budget;
use crate::fragments::{classify, Fragment};
use crate::oracle::{lasso_eval, EvalError};
use crate::trace::{fresh_values, LassoTrace};

/// Verdict of the bounded classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoVerdict {
    Good(usize),
    Bad(usize),
    Undecided,
}

impl fmt::Display for TwoVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwoVerdict::Good(i) => write!(f, "good at {i}"),
            TwoVerdict::Bad(i) => write!(f, "bad at {i}"),
            TwoVerdict::Undecided => f.write_str("undecided"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HmldError {
    NotInFragment(Path),
    Eval(EvalError),
    Unbound(String),
}

impl fmt::Display for HmldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HmldError::NotInFragment(p) => write!(
                f,
                "two-verdict monitoring requires a recursion-free formula; offending node at {}",
                path_string(p)
            ),
            HmldError::Eval(e) => e.fmt(f),
            HmldError::Unbound(s) => write!(f, "unbound data variable `{s}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HmldError {}

/// A recognizer that classifies every prefix of length n (the formula's
/// modal height) as good or bad, and stays undecided before that.
#[derive(Clone, Debug)]
pub struct BoundedClassifier {
    formula: Formula,
    env0: DataEnv,
    height: usize,
    buffer: Vec<DataValue>,
    verdict: TwoVerdict,
    budget_limit: u64,
}

impl BoundedClassifier {
    pub fn new(f: &Formula, env0: DataEnv) -> Result<Self, HmldError> {
        let report = classify(f);
        if !report.is_member(Fragment::Hmld) {
            let witness = report
                .status(Fragment::Hmld)
                .witness
                .clone()
                .unwrap_or_default();
            return Err(HmldError::NotInFragment(witness));
        }
        let desugared = crate::fragments::desugar_all(f);
        let mut classifier = BoundedClassifier {
            height: desugared.modal_height(),
            formula: desugared,
            env0,
            buffer: Vec::new(),
            verdict: TwoVerdict::Undecided,
            budget_limit: crate::budget::DEFAULT_BUDGET,
        };
        if classifier.height == 0 {
            classifier.decide()?;
        }
        Ok(classifier)
    }

    pub fn with_budget(mut self, limit: u64) -> Self {
        self.budget_limit = limit;
        self
    }

    /// Modal height: the exact index at which the verdict fires.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn verdict(&self) -> TwoVerdict {
        self.verdict
    }

    pub fn feed(&mut self, d: DataValue) -> Result<TwoVerdict, HmldError> {
        if !matches!(self.verdict, TwoVerdict::Undecided) {
            return Ok(self.verdict);
        }
        self.buffer.push(d);
        if self.buffer.len() == self.height {
            self.decide()?;
        }
        Ok(self.verdict)
    }

    fn decide(&mut self) -> Result<(), HmldError> {
        let mut avoid: Vec<DataValue> = self.buffer.clone();
        avoid.extend(self.env0.values().cloned());
        let filler = fresh_values(&avoid, 1, "h").pop().expect("fresh value");
        let lasso = LassoTrace::new(self.buffer.clone(), alloc::vec![filler])
            .expect("nonempty loop");
        let mut budget = Budget::new(self.budget_limit);
        let holds = lasso_eval(&self.formula, &self.env0, &lasso, &mut budget).map_err(|e| {
            match e {
                EvalError::Unbound(u) => HmldError::Unbound(u.var.as_str().into()),
                other => HmldError::Eval(other),
            }
        })?;
        self.verdict = if holds {
            TwoVerdict::Good(self.buffer.len())
        } else {
            TwoVerdict::Bad(self.buffer.len())
        };
        Ok(())
    }
}

/// Classifies a whole prefix at once; `Undecided` when it is shorter than
/// the formula's modal height.
pub fn classify_prefix(
    f: &Formula,
    env0: &DataEnv,
    w: &[DataValue],
) -> Result<TwoVerdict, HmldError> {
    let mut classifier = BoundedClassifier::new(f, env0.clone())?;
    for d in w {
        if !matches!(classifier.verdict(), TwoVerdict::Undecided) {
            break;
        }
        classifier.feed(d.clone())?;
    }
    Ok(classifier.verdict())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn vals(s: &str) -> Vec<DataValue> {
        s.split(',').map(DataValue::new).collect()
    }

    #[test]
    fn first_two_equal_classifies_at_two() {
        let f = parse_formula("exists x. <*=x><*=x> tt").unwrap();
        assert_eq!(
            classify_prefix(&f, &DataEnv::new(), &vals("5,5")).unwrap(),
            TwoVerdict::Good(2)
        );
        assert_eq!(
            classify_prefix(&f, &DataEnv::new(), &vals("5,6")).unwrap(),
            TwoVerdict::Bad(2)
        );
        assert_eq!(
            classify_prefix(&f, &DataEnv::new(), &vals("5")).unwrap(),
            TwoVerdict::Undecided
        );
    }

    #[test]
    fn height_zero_formulas_decide_immediately() {
        let c = BoundedClassifier::new(&Formula::Tt, DataEnv::new()).unwrap();
        assert_eq!(c.verdict(), TwoVerdict::Good(0));
        let c = BoundedClassifier::new(&Formula::Ff, DataEnv::new()).unwrap();
        assert_eq!(c.verdict(), TwoVerdict::Bad(0));
    }

    #[test]
    fn rejects_recursive_formulas() {
        let f = parse_formula("min X. <true> X | tt").unwrap();
        assert!(matches!(
            BoundedClassifier::new(&f, DataEnv::new()),
            Err(HmldError::NotInFragment(_))
        ));
    }

    #[test]
    fn box_formulas_are_supported() {
        // every first event differs from the second: [b] over two steps
        let f = parse_formula("forall x. [*=x][*=x] ff").unwrap();
        assert_eq!(
            classify_prefix(&f, &DataEnv::new(), &vals("5,6")).unwrap(),
            TwoVerdict::Good(2)
        );
        assert_eq!(
            classify_prefix(&f, &DataEnv::new(), &vals("5,5")).unwrap(),
            TwoVerdict::Bad(2)
        );
    }
}
