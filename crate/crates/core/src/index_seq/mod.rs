//! Strictly increasing sequences of positive integers, relative upper
//! densities, and the density-one merge.
//!
//! An [`IndexSequence`] is either a finite, fully materialized list of terms
//! or an unbounded sequence described by a closed-form [`Rule`]. Rules give
//! random access to any term, so "lazy extension" never mutates an existing
//! term: [`IndexSequence::materialize`] only caches terms the rule already
//! determines.

pub(crate) mod density;
mod merge;

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

pub use density::{
    in_density_class, in_density_class_within, upper_density, ClassMembership, DensityEstimate,
};
pub use merge::{merge_countable, merge_density_one, plan_merge, Enrollment, MergeConfig, MergePlan, MergeResult, MergeStage, StopRule};

use crate::error::{invalid, Error, Result};

/// Closed-form generator for an unbounded sequence. Index `k` is zero-based.
#[derive(Clone)]
pub enum Rule {
    /// `first + step * k`.
    Arithmetic { first: u64, step: u64 },
    /// `(k + 1)^2`.
    Squares,
    /// Any strictly increasing positive map; checked whenever terms are walked.
    Custom {
        name: String,
        term: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
    },
}

impl Rule {
    fn term(&self, k: u64) -> Option<u64> {
        match self {
            Rule::Arithmetic { first, step } => step.checked_mul(k)?.checked_add(*first),
            Rule::Squares => (k + 1).checked_mul(k + 1),
            Rule::Custom { term, .. } => Some(term(k)),
        }
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Arithmetic { first, step } => write!(f, "ap({first},{step})"),
            Rule::Squares => f.write_str("squares"),
            Rule::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IndexSequence {
    prefix: Vec<u64>,
    rule: Option<Rule>,
}

impl IndexSequence {
    /// Finite sequence; rejects empty input, zero terms and non-increasing steps.
    pub fn from_terms(terms: Vec<u64>) -> Result<Self> {
        check_terms(&terms)?;
        Ok(Self {
            prefix: terms,
            rule: None,
        })
    }

    pub fn from_rule(rule: Rule) -> Result<Self> {
        match &rule {
            Rule::Arithmetic { first, step } if *first == 0 || *step == 0 => {
                return invalid("arithmetic progression needs first >= 1 and step >= 1");
            }
            Rule::Custom { term, name } => {
                let (a, b) = (term(0), term(1));
                if a == 0 || b <= a {
                    return invalid(format!("custom rule {name} is not strictly increasing and positive"));
                }
            }
            _ => {}
        }
        Ok(Self {
            prefix: Vec::new(),
            rule: Some(rule),
        })
    }

    pub fn naturals() -> Self {
        Self::arithmetic(1, 1).expect("valid progression")
    }

    pub fn evens() -> Self {
        Self::arithmetic(2, 2).expect("valid progression")
    }

    pub fn odds() -> Self {
        Self::arithmetic(1, 2).expect("valid progression")
    }

    pub fn multiples(of: u64) -> Result<Self> {
        Self::arithmetic(of, of)
    }

    pub fn arithmetic(first: u64, step: u64) -> Result<Self> {
        Self::from_rule(Rule::Arithmetic { first, step })
    }

    pub fn squares() -> Self {
        Self::from_rule(Rule::Squares).expect("valid rule")
    }

    pub fn custom(name: impl Into<String>, term: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Result<Self> {
        Self::from_rule(Rule::Custom {
            name: name.into(),
            term: Arc::new(term),
        })
    }

    pub fn rule(&self) -> Option<&Rule> {
        self.rule.as_ref()
    }

    /// Number of terms, or `None` when the sequence is unbounded.
    pub fn len(&self) -> Option<usize> {
        match self.rule {
            Some(_) => None,
            None => Some(self.prefix.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_finite(&self) -> bool {
        self.rule.is_none()
    }

    /// Whether at least `n` terms exist.
    pub fn has_terms(&self, n: usize) -> bool {
        self.len().is_none_or(|len| len >= n)
    }

    /// Zero-based term access.
    pub fn term(&self, k: usize) -> Option<u64> {
        if let Some(&t) = self.prefix.get(k) {
            return Some(t);
        }
        self.rule.as_ref()?.term(k as u64)
    }

    /// The terms materialized so far.
    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    /// Caches the first `n` terms of a rule-generated sequence, validating order.
    pub fn materialize(&mut self, n: usize) -> Result<()> {
        let Some(rule) = &self.rule else {
            if n > self.prefix.len() {
                return invalid(format!("finite sequence has only {} terms", self.prefix.len()));
            }
            return Ok(());
        };
        let mut prev = self.prefix.last().copied();
        for k in self.prefix.len()..n {
            let t = rule
                .term(k as u64)
                .ok_or_else(|| Error::InvalidArgument(format!("term {k} overflows u64")))?;
            if t == 0 || prev.is_some_and(|p| t <= p) {
                return invalid(format!("rule {rule:?} is not strictly increasing at index {k}"));
            }
            self.prefix.push(t);
            prev = Some(t);
        }
        Ok(())
    }

    /// First `n` terms, checked for strict increase.
    pub fn take_checked(&self, n: usize) -> Result<Vec<u64>> {
        if !self.has_terms(n) {
            return invalid(format!(
                "requested {n} terms but the sequence has only {}",
                self.prefix.len()
            ));
        }
        let mut out = Vec::with_capacity(n);
        let mut prev = 0u64;
        for k in 0..n {
            let t = self
                .term(k)
                .ok_or_else(|| Error::InvalidArgument(format!("term {k} overflows u64")))?;
            if t <= prev {
                return invalid(format!("sequence is not strictly increasing at index {k}"));
            }
            out.push(t);
            prev = t;
        }
        Ok(out)
    }

    /// Iterates every term in order (unbounded for rule sequences).
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..).map_while(move |k| self.term(k))
    }

    /// Zero-based index of the first term `>= value`, if any.
    pub fn first_index_at_least(&self, value: u64) -> Option<usize> {
        match &self.rule {
            None => {
                let k = self.prefix.partition_point(|&t| t < value);
                (k < self.prefix.len()).then_some(k)
            }
            Some(Rule::Arithmetic { first, step }) => {
                if value <= *first {
                    Some(0)
                } else {
                    Some((value - first).div_ceil(*step) as usize)
                }
            }
            Some(_) => {
                // Terms are strictly increasing and positive, so term(k) >= k + 1.
                let (mut lo, mut hi) = (0u64, value);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    match self.term(mid as usize) {
                        Some(t) if t < value => lo = mid + 1,
                        _ => hi = mid,
                    }
                }
                Some(lo as usize)
            }
        }
    }

    pub fn contains(&self, value: u64) -> bool {
        match &self.rule {
            Some(Rule::Arithmetic { first, step }) => value >= *first && (value - first) % step == 0,
            _ => self
                .first_index_at_least(value)
                .and_then(|k| self.term(k))
                .is_some_and(|t| t == value),
        }
    }

    /// Reads the plain-text sequence format: one positive integer per line, `#` comments.
    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut terms = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t: u64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("not a positive integer: {line:?}"),
            })?;
            if t == 0 || terms.last().is_some_and(|&p| t <= p) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("term {t} breaks strict increase"),
                });
            }
            terms.push(t);
        }
        Self::from_terms(terms)
    }

    pub fn write_to(&self, mut w: impl Write, count: usize, header: &[String]) -> Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for t in self.take_checked(count)? {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }
}

fn check_terms(terms: &[u64]) -> Result<()> {
    if terms.first() == Some(&0) {
        return invalid("terms must be positive integers");
    }
    if let Some(k) = terms.windows(2).position(|w| w[1] <= w[0]) {
        return invalid(format!(
            "terms must be strictly increasing: {} then {} at index {}",
            terms[k],
            terms[k + 1],
            k + 1
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_terms() {
        assert!(IndexSequence::from_terms(vec![0, 1]).is_err());
        assert!(IndexSequence::from_terms(vec![1, 3, 3]).is_err());
        assert!(IndexSequence::from_terms(vec![5, 2]).is_err());
        assert!(IndexSequence::arithmetic(0, 1).is_err());
        assert!(IndexSequence::custom("flat", |_| 4).is_err());
    }

    #[test]
    fn rule_access_and_search() {
        let evens = IndexSequence::evens();
        assert_eq!(evens.term(0), Some(2));
        assert_eq!(evens.first_index_at_least(7), Some(3));
        assert!(evens.contains(10));
        assert!(!evens.contains(11));
        let sq = IndexSequence::squares();
        assert_eq!(sq.first_index_at_least(10), Some(3));
        assert!(sq.contains(49));
        assert!(!sq.contains(50));
        let fin = IndexSequence::from_terms(vec![3, 8, 9]).unwrap();
        assert_eq!(fin.first_index_at_least(10), None);
        assert_eq!(fin.first_index_at_least(4), Some(1));
        assert!(fin.take_checked(4).is_err());
    }

    #[test]
    fn materialize_keeps_prefix() {
        let mut s = IndexSequence::squares();
        s.materialize(3).unwrap();
        assert_eq!(s.prefix(), &[1, 4, 9]);
        s.materialize(5).unwrap();
        assert_eq!(s.prefix(), &[1, 4, 9, 16, 25]);
        let mut bad = IndexSequence::custom("zigzag", |k| if k == 3 { 1 } else { k + 1 }).unwrap();
        assert!(bad.materialize(5).is_err());
    }

    #[test]
    fn file_format_round_trip() {
        let text = "# evens\n2\n4\n\n6\n";
        let s = IndexSequence::read_from(text.as_bytes()).unwrap();
        assert_eq!(s.prefix(), &[2, 4, 6]);
        let mut out = Vec::new();
        s.write_to(&mut out, 3, &["hdr".into()]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "# hdr\n2\n4\n6\n");
        let err = IndexSequence::read_from("1\n# c\n1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}
