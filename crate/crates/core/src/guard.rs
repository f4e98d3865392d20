//! The end-to-end guarded-monitoring pipeline: guard a max-free formula
//! with `gd`, then stream events through the good-prefix checker. Every
//! `Good` verdict is sound for the original formula because the guarded
//! form denotes a subset of it, and every good prefix of the original is
//! eventually flagged because the guarding preserves good prefixes.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use crate::ast::{DataEnv, DataValue, Formula};
use crate::budget::{Budget, DEFAULT_BUDGET};
use crate::fragments::{check_guarded_root, gd, GdError};
use crate::norm::{normalize, NormalizeError};
use crate::oracle::{
    good_prefix_guarded_cached, GoodPrefixCache, GuardedAnnotation, PrefixVerdict,
};

/// Verdict state of a streaming session. `Good` is irrevocable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionVerdict {
    Good { at: usize },
    Pending,
}

impl SessionVerdict {
    pub fn is_good(&self) -> bool {
        matches!(self, SessionVerdict::Good { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionError {
    Gd(GdError),
    Normalize(NormalizeError),
    NotGuarded(String),
    Unbound(String),
}

impl fmt::Display for SessionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionError::Gd(e) => e.fmt(f),
            SessionError::Normalize(e) => e.fmt(f),
            SessionError::NotGuarded(s) => write!(f, "not in the guarded fragment: {s}"),
            SessionError::Unbound(s) => write!(f, "unbound data variable `{s}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SessionError {}

/// A streaming good-prefix monitor over a guarded formula.
#[derive(Clone, Debug)]
pub struct GuardedSession {
    formula: Formula,
    env0: DataEnv,
    prefix: Vec<DataValue>,
    verdict: SessionVerdict,
    budget_limit: u64,
    cache: GoodPrefixCache,
    stalled: bool,
    budget_used_last: u64,
    annotation: Option<GuardedAnnotation>,
}

impl GuardedSession {
    /// Wraps a formula that is already in the guarded fragment.
    pub fn over_guarded(formula: Formula, env0: DataEnv) -> Result<Self, SessionError> {
        let check = check_guarded_root(&formula);
        if !check.accepted {
            return Err(SessionError::NotGuarded(
                check
                    .rejection
                    .map(|r| r.to_string())
                    .unwrap_or_else(|| "rejected".into()),
            ));
        }
        Ok(GuardedSession {
            formula,
            env0,
            prefix: Vec::new(),
            verdict: SessionVerdict::Pending,
            budget_limit: DEFAULT_BUDGET,
            cache: GoodPrefixCache::new(),
            stalled: false,
            budget_used_last: 0,
            annotation: None,
        })
    }

    pub fn with_budget(mut self, limit: u64) -> Self {
        self.budget_limit = limit;
        self
    }

    /// The formula the session actually monitors.
    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn verdict(&self) -> &SessionVerdict {
        &self.verdict
    }

    /// Whether the last feed ran out of budget (never a verdict).
    pub fn stalled(&self) -> bool {
        self.stalled
    }

    pub fn budget_used_last(&self) -> u64 {
        self.budget_used_last
    }

    pub fn prefix(&self) -> &[DataValue] {
        &self.prefix
    }

    /// The certifying annotation once the verdict is `Good`.
    pub fn annotation(&self) -> Option<&GuardedAnnotation> {
        self.annotation.as_ref()
    }

    /// Appends one event and re-checks; a `Good` verdict is permanent and
    /// further feeds are no-ops on it.
    pub fn feed(&mut self, d: DataValue) -> Result<&SessionVerdict, SessionError> {
        if self.verdict.is_good() {
            return Ok(&self.verdict);
        }
        self.prefix.push(d);
        self.recheck()?;
        Ok(&self.verdict)
    }

    /// Checks the (possibly empty) current prefix; useful to detect
    /// formulas that are good at length zero.
    pub fn check_now(&mut self) -> Result<&SessionVerdict, SessionError> {
        if self.verdict.is_good() {
            return Ok(&self.verdict);
        }
        self.recheck()?;
        Ok(&self.verdict)
    }

    fn recheck(&mut self) -> Result<(), SessionError> {
        let mut budget = Budget::new(self.budget_limit);
        let verdict = good_prefix_guarded_cached(
            &self.formula,
            &self.env0,
            &self.prefix,
            &mut budget,
            &mut self.cache,
        )
        .map_err(|e| match e {
            crate::oracle::GoodPrefixError::NotGuarded(s) => SessionError::NotGuarded(s),
            crate::oracle::GoodPrefixError::Table(t) => SessionError::NotGuarded(t.to_string()),
            crate::oracle::GoodPrefixError::Unbound(v) => SessionError::Unbound(v),
        })?;
        self.budget_used_last = budget.used();
        match verdict {
            PrefixVerdict::Good { annotation } => {
                self.verdict = SessionVerdict::Good {
                    at: self.prefix.len(),
                };
                self.annotation = Some(annotation);
                self.stalled = false;
            }
            PrefixVerdict::Unknown { budget_exhausted } => {
                self.stalled = budget_exhausted;
            }
        }
        Ok(())
    }

    pub fn feed_all(
        &mut self,
        events: impl IntoIterator<Item = DataValue>,
    ) -> Result<&SessionVerdict, SessionError> {
        for d in events {
            self.feed(d)?;
            if self.verdict.is_good() {
                break;
            }
        }
        Ok(&self.verdict)
    }
}

/// Builds a streaming session for any max-free formula by first passing it
/// through the guarding transformation. The session then monitors `gd(f)`:
/// every `Good` it raises is sound for `f`, and every certified good
/// prefix of `f` is eventually flagged (within budget).
pub fn guard_pipeline(f: &Formula, env0: DataEnv) -> Result<GuardedSession, SessionError> {
    let normalized = normalize(f).map_err(SessionError::Normalize)?;
    let guarded = gd(&normalized.formula).map_err(SessionError::Gd)?;
    GuardedSession::over_guarded(guarded, env0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn v(s: &str) -> DataValue {
        DataValue::new(s)
    }

    #[test]
    fn pipeline_rejects_max() {
        let f = parse_formula("max X. [true] X").unwrap();
        assert!(matches!(
            guard_pipeline(&f, DataEnv::new()),
            Err(SessionError::Gd(GdError::ContainsMax(_)))
        ));
    }

    #[test]
    fn leak_session_flags_good_at_repetition() {
        let f = parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap();
        let mut session = guard_pipeline(&f, DataEnv::new()).unwrap();
        session.feed(v("1")).unwrap();
        assert_eq!(*session.verdict(), SessionVerdict::Pending);
        session.feed(v("0")).unwrap();
        assert_eq!(*session.verdict(), SessionVerdict::Pending);
        session.feed(v("1")).unwrap();
        assert_eq!(*session.verdict(), SessionVerdict::Good { at: 3 });
        // irrevocable and insensitive to further events
        session.feed(v("9")).unwrap();
        assert_eq!(*session.verdict(), SessionVerdict::Good { at: 3 });
        assert!(session.annotation().is_some());
    }

    #[test]
    fn tt_is_good_at_zero() {
        let mut session = guard_pipeline(&Formula::Tt, DataEnv::new()).unwrap();
        session.check_now().unwrap();
        assert_eq!(*session.verdict(), SessionVerdict::Good { at: 0 });
    }

    #[test]
    fn stalled_is_recorded_not_reported() {
        let f = parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap();
        let mut session = guard_pipeline(&f, DataEnv::new()).unwrap().with_budget(2);
        session.feed(v("1")).unwrap();
        session.feed(v("1")).unwrap();
        assert_eq!(*session.verdict(), SessionVerdict::Pending);
        assert!(session.stalled());
    }
}
