//! Finite and ultimately-periodic traces, value renamings and equality types.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use crate::ast::DataValue;

/// A finite data word.
pub type FiniteTrace = Vec<DataValue>;

/// An ultimately periodic infinite trace `prefix · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LassoTrace {
    prefix: FiniteTrace,
    cycle: FiniteTrace,
}

impl LassoTrace {
    pub fn new(prefix: FiniteTrace, cycle: FiniteTrace) -> Result<Self, EmptyCycle> {
        if cycle.is_empty() {
            Err(EmptyCycle)
        } else {
            Ok(LassoTrace { prefix, cycle })
        }
    }

    pub fn prefix(&self) -> &[DataValue] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[DataValue] {
        &self.cycle
    }

    /// Number of distinct positions (suffixes) of the lasso.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value_at(&self, pos: usize) -> &DataValue {
        if pos < self.prefix.len() {
            &self.prefix[pos]
        } else {
            &self.cycle[pos - self.prefix.len()]
        }
    }

    /// Successor position; the last cycle position wraps to the cycle start.
    pub fn succ(&self, pos: usize) -> usize {
        if pos + 1 < self.len() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }

    /// Distinct values occurring anywhere on the lasso, first-occurrence order.
    pub fn values(&self) -> Vec<DataValue> {
        let mut out = Vec::new();
        for v in self.prefix.iter().chain(self.cycle.iter()) {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    /// First `n` elements of the denoted infinite trace.
    pub fn unroll(&self, n: usize) -> FiniteTrace {
        let mut out = Vec::with_capacity(n);
        let mut pos = 0;
        for _ in 0..n {
            out.push(self.value_at(pos).clone());
            pos = self.succ(pos);
        }
        out
    }

    /// Parses `prefix-tokens ";" loop-tokens`, tokens whitespace-separated.
    pub fn parse_str(s: &str) -> Result<Self, LassoParseError> {
        let mut parts = s.splitn(2, ';');
        let prefix_part = parts.next().unwrap_or("");
        let cycle_part = parts.next().ok_or(LassoParseError::MissingSeparator)?;
        let tokens = |part: &str| -> FiniteTrace {
            part.split_whitespace().map(DataValue::new).collect()
        };
        LassoTrace::new(tokens(prefix_part), tokens(cycle_part))
            .map_err(|_| LassoParseError::EmptyCycle)
    }
}

impl fmt::Display for LassoTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.prefix {
            write!(f, "{v} ")?;
        }
        write!(f, ";")?;
        for v in &self.cycle {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmptyCycle;

impl fmt::Display for EmptyCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("lasso loop must be nonempty")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmptyCycle {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LassoParseError {
    MissingSeparator,
    EmptyCycle,
}

impl fmt::Display for LassoParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LassoParseError::MissingSeparator => {
                f.write_str("lasso must contain a `;` between prefix and loop")
            }
            LassoParseError::EmptyCycle => f.write_str("lasso loop must be nonempty"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LassoParseError {}

/// A finite injective value map, implicitly extended by the identity.
/// Stands in for a bijection of the whole domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    map: BTreeMap<DataValue, DataValue>,
}

impl Renaming {
    pub fn new(pairs: impl IntoIterator<Item = (DataValue, DataValue)>) -> Result<Self, NotInjective> {
        let mut map = BTreeMap::new();
        let mut seen = alloc::collections::BTreeSet::new();
        for (from, to) in pairs {
            if !seen.insert(to.clone()) {
                return Err(NotInjective { image: to });
            }
            if let Some(prev) = map.insert(from.clone(), to) {
                let _ = prev;
                return Err(NotInjective { image: from });
            }
        }
        Ok(Renaming { map })
    }

    pub fn apply_value(&self, v: &DataValue) -> DataValue {
        self.map.get(v).cloned().unwrap_or_else(|| v.clone())
    }

    pub fn apply_trace(&self, w: &[DataValue]) -> FiniteTrace {
        w.iter().map(|v| self.apply_value(v)).collect()
    }

    pub fn apply_lasso(&self, t: &LassoTrace) -> LassoTrace {
        LassoTrace {
            prefix: self.apply_trace(t.prefix()),
            cycle: self.apply_trace(t.cycle()),
        }
    }
}

/// Pointwise image of a finite trace under an injective map.
pub fn apply_renaming(sigma: &Renaming, w: &[DataValue]) -> FiniteTrace {
    sigma.apply_trace(w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotInjective {
    pub image: DataValue,
}

impl fmt::Display for NotInjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "renaming is not injective at `{}`", self.image)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NotInjective {}

/// The equality type of a finite word: position i is labeled by the index
/// of the first position carrying the same value. Two words have equal
/// types iff some renaming maps one to the other.
pub fn word_type(w: &[DataValue]) -> Vec<usize> {
    let mut labels = Vec::with_capacity(w.len());
    for (i, v) in w.iter().enumerate() {
        let first = w[..i].iter().position(|u| u == v).unwrap_or(i);
        labels.push(first);
    }
    labels
}

/// Reserved token prefix for values the toolkit invents (fresh quantifier
/// representatives and register sentinels).
pub const RESERVED_PREFIX: &str = "\u{22a5}";

/// Deterministically picks `count` values distinct from everything in `avoid`.
pub fn fresh_values(avoid: &[DataValue], count: usize, tag: &str) -> Vec<DataValue> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0usize;
    while out.len() < count {
        let mut name = String::new();
        fmt::Write::write_fmt(&mut name, format_args!("{RESERVED_PREFIX}{tag}{i}")).unwrap();
        let candidate = DataValue::new(&name);
        if !avoid.contains(&candidate) && !out.contains(&candidate) {
            out.push(candidate);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> DataValue {
        DataValue::new(s)
    }

    #[test]
    fn lasso_positions_wrap() {
        let t = LassoTrace::new(alloc::vec![v("0"), v("2"), v("0")], alloc::vec![v("1")]).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.value_at(3), &v("1"));
        assert_eq!(t.succ(3), 3);
        assert_eq!(t.unroll(6), alloc::vec![v("0"), v("2"), v("0"), v("1"), v("1"), v("1")]);
    }

    #[test]
    fn lasso_parse_round() {
        let t = LassoTrace::parse_str("0 2 0 ; 1").unwrap();
        assert_eq!(t.prefix(), &[v("0"), v("2"), v("0")]);
        assert_eq!(t.cycle(), &[v("1")]);
        assert!(LassoTrace::parse_str("0 2 0").is_err());
        assert!(LassoTrace::parse_str("0 2 0 ;").is_err());
    }

    #[test]
    fn renaming_pointwise() {
        let sigma = Renaming::new([(v("1"), v("7")), (v("0"), v("3"))]).unwrap();
        assert_eq!(
            apply_renaming(&sigma, &[v("1"), v("0"), v("1")]),
            alloc::vec![v("7"), v("3"), v("7")]
        );
    }

    #[test]
    fn renaming_identity_default() {
        let sigma = Renaming::new([]).unwrap();
        let w = alloc::vec![v("a"), v("b")];
        assert_eq!(apply_renaming(&sigma, &w), w);
    }

    #[test]
    fn renaming_rejects_non_injective() {
        assert!(Renaming::new([(v("1"), v("7")), (v("2"), v("7"))]).is_err());
    }

    #[test]
    fn renaming_preserves_type() {
        let sigma = Renaming::new([(v("1"), v("9")), (v("0"), v("4"))]).unwrap();
        let w = alloc::vec![v("1"), v("0"), v("1"), v("2")];
        assert_eq!(word_type(&w), word_type(&apply_renaming(&sigma, &w)));
    }

    #[test]
    fn word_type_examples() {
        assert_eq!(word_type(&[v("1"), v("2"), v("1")]), alloc::vec![0, 1, 0]);
        assert_eq!(
            word_type(&[v("2"), v("3"), v("2")]),
            word_type(&[v("1"), v("2"), v("1")])
        );
        assert_ne!(
            word_type(&[v("1"), v("2"), v("1")]),
            word_type(&[v("1"), v("2"), v("3")])
        );
    }

    #[test]
    fn fresh_values_avoid_collisions() {
        let avoid = alloc::vec![v("\u{22a5}q0"), v("a")];
        let fresh = fresh_values(&avoid, 2, "q");
        assert_eq!(fresh.len(), 2);
        for f in &fresh {
            assert!(!avoid.contains(f));
        }
    }
}
