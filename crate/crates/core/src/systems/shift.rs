//! Pairs of points in the one-sided full shift, described by where they disagree.
//!
//! The metric is `d(x, y) = 2^-min{i >= 0 : x_i != y_i}` (0 when `x = y`), so
//! `d(σ^n x, σ^n y) = 2^-(g - n)` with `g` the first disagreement position at
//! or after `n`. Everything here is exact integer arithmetic.

use std::fmt;
use std::str::FromStr;

use super::distance::Distance;
use super::OrbitPair;
use crate::error::{invalid, Error, Result};

/// Disagreement set repeats with `period` from position `offset` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicTail {
    pub offset: u64,
    pub period: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftPair {
    alphabet_size: u32,
    /// Sorted, disjoint, non-adjacent half-open intervals. With a periodic
    /// tail these cover exactly `[0, offset + period)`; the pattern is the part
    /// inside `[offset, offset + period)`.
    blocks: Vec<(u64, u64)>,
    tail: Option<PeriodicTail>,
}

impl ShiftPair {
    pub fn new(alphabet_size: u32, blocks: Vec<(u64, u64)>, tail: Option<PeriodicTail>) -> Result<Self> {
        if alphabet_size < 2 {
            return invalid("alphabet size must be at least 2");
        }
        let mut blocks = blocks;
        blocks.retain(|(a, b)| a < b);
        blocks.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(blocks.len());
        for (a, b) in blocks {
            match merged.last_mut() {
                Some(last) if a < last.1 => {
                    return invalid(format!("blocks overlap at {a}"));
                }
                Some(last) if a == last.1 => last.1 = b,
                _ => merged.push((a, b)),
            }
        }
        if let Some(t) = tail {
            if t.period == 0 {
                return invalid("period must be positive");
            }
            let end = t.offset + t.period;
            if merged.last().is_some_and(|&(_, b)| b > end) {
                return invalid(format!("blocks extend past the first period ending at {end}"));
            }
        }
        Ok(Self {
            alphabet_size,
            blocks: merged,
            tail,
        })
    }

    /// The diagonal pair `(x, x)`.
    pub fn identical(alphabet_size: u32) -> Result<Self> {
        Self::new(alphabet_size, Vec::new(), None)
    }

    /// Points that differ at every position.
    pub fn fully_disagreeing(alphabet_size: u32) -> Result<Self> {
        Self::new(alphabet_size, vec![(0, 1)], Some(PeriodicTail { offset: 0, period: 1 }))
    }

    /// Pair of finite words, each followed by an all-zero tail.
    pub fn from_words(alphabet_size: u32, x: &[u8], y: &[u8]) -> Result<Self> {
        let n = x.len().max(y.len());
        let at = |w: &[u8], i: usize| w.get(i).copied().unwrap_or(0);
        if let Some(&s) = x.iter().chain(y).find(|&&s| s as u32 >= alphabet_size) {
            return invalid(format!("symbol {s} outside alphabet of size {alphabet_size}"));
        }
        let mut blocks = Vec::new();
        let mut start = None;
        for i in 0..=n {
            let differs = i < n && at(x, i) != at(y, i);
            match (differs, start) {
                (true, None) => start = Some(i as u64),
                (false, Some(s)) => {
                    blocks.push((s, i as u64));
                    start = None;
                }
                _ => {}
            }
        }
        Self::new(alphabet_size, blocks, None)
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn blocks(&self) -> &[(u64, u64)] {
        &self.blocks
    }

    pub fn tail(&self) -> Option<PeriodicTail> {
        self.tail
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.is_empty()
    }

    fn pattern(&self, t: PeriodicTail) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.blocks
            .iter()
            .filter(move |&&(_, b)| b > t.offset)
            .map(move |&(a, b)| (a.max(t.offset) - t.offset, b - t.offset))
    }

    /// First disagreement position `>= n`.
    pub fn next_disagreement(&self, n: u64) -> Option<u64> {
        let k = self.blocks.partition_point(|&(_, b)| b <= n);
        if let Some(&(a, _)) = self.blocks.get(k) {
            return Some(a.max(n));
        }
        let t = self.tail?;
        let n = n.max(t.offset);
        let r = (n - t.offset) % t.period;
        let base = n - r;
        if let Some((a, _)) = self.pattern(t).find(|&(_, b)| b > r) {
            return Some(base + a.max(r));
        }
        self.pattern(t).next().map(|(a, _)| base + t.period + a)
    }

    pub fn distance(&self, n: u64) -> Distance {
        match self.next_disagreement(n) {
            Some(g) => Distance::Dyadic(g - n),
            None => Distance::Zero,
        }
    }

    /// Disagreement intervals intersected with `[0, end)`, unrolling the periodic tail.
    pub fn blocks_until(&self, end: u64) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = self
            .blocks
            .iter()
            .filter(|&&(a, _)| a < end)
            .map(|&(a, b)| (a, b.min(end)))
            .collect();
        if let Some(t) = self.tail {
            let pattern: Vec<_> = self.pattern(t).collect();
            let mut base = t.offset + t.period;
            while base < end && !pattern.is_empty() {
                for &(a, b) in &pattern {
                    if base + a >= end {
                        break;
                    }
                    let blk = (base + a, (base + b).min(end));
                    match out.last_mut() {
                        Some(last) if last.1 == blk.0 => last.1 = blk.1,
                        _ => out.push(blk),
                    }
                }
                base += t.period;
            }
        }
        out
    }

    /// The pair `(σ^k x, σ^k y)`.
    pub fn shifted(&self, k: u64) -> ShiftPair {
        let shift = |(a, b): (u64, u64)| (a.saturating_sub(k), b - k);
        match self.tail {
            None => {
                let blocks = self.blocks.iter().filter(|&&(_, b)| b > k).map(|&blk| shift(blk)).collect();
                Self::new(self.alphabet_size, blocks, None).expect("shift preserves validity")
            }
            Some(t) => {
                // First period boundary at or after k.
                let m = if k <= t.offset {
                    t.offset
                } else {
                    t.offset + (k - t.offset).div_ceil(t.period) * t.period
                };
                let blocks = self
                    .blocks_until(m + t.period)
                    .into_iter()
                    .filter(|&(_, b)| b > k)
                    .map(shift)
                    .collect();
                let tail = PeriodicTail {
                    offset: m - k,
                    period: t.period,
                };
                Self::new(self.alphabet_size, blocks, Some(tail)).expect("shift preserves validity")
            }
        }
    }
}

impl OrbitPair for ShiftPair {
    fn distance_at(&self, n: u64) -> Result<Distance> {
        Ok(self.distance(n))
    }

    fn describe(&self) -> String {
        format!("shift[{}]", self.to_string().replace('\n', "; "))
    }
}

/// Text form: `alphabet = 2`, `blocks = 5..10, 20..40`, optional `period` and `offset`.
impl fmt::Display for ShiftPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet = {}", self.alphabet_size)?;
        let blocks: Vec<String> = self.blocks.iter().map(|(a, b)| format!("{a}..{b}")).collect();
        write!(f, "blocks = {}", blocks.join(", "))?;
        if let Some(t) = self.tail {
            write!(f, "\nperiod = {}\noffset = {}", t.period, t.offset)?;
        }
        Ok(())
    }
}

impl FromStr for ShiftPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut alphabet = None;
        let mut blocks = Vec::new();
        let (mut period, mut offset) = (None, None);
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key = value, got {line:?}")))?;
            let value = value.trim();
            let num = |v: &str| v.trim().parse::<u64>().map_err(|_| perr(format!("not an integer: {v:?}")));
            match key.trim() {
                "alphabet" => alphabet = Some(num(value)? as u32),
                "blocks" => blocks = parse_blocks(value).map_err(perr)?,
                "period" => period = Some(num(value)?),
                "offset" => offset = Some(num(value)?),
                other => return Err(perr(format!("unknown key {other:?}"))),
            }
        }
        let alphabet = alphabet.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing alphabet".into(),
        })?;
        let tail = match (period, offset) {
            (Some(period), offset) => Some(PeriodicTail {
                period,
                offset: offset.unwrap_or(0),
            }),
            (None, Some(_)) => return invalid("offset given without period"),
            (None, None) => None,
        };
        Self::new(alphabet, blocks, tail)
    }
}

/// Parses `"a..b, c..d"` (empty string for no blocks).
pub fn parse_blocks(value: &str) -> std::result::Result<Vec<(u64, u64)>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|r| {
            let (a, b) = r.split_once("..").ok_or_else(|| format!("expected a..b, got {r:?}"))?;
            let a = a.trim().parse::<u64>().map_err(|_| format!("bad block start {a:?}"))?;
            let b = b.trim().parse::<u64>().map_err(|_| format!("bad block end {b:?}"))?;
            if b <= a {
                return Err(format!("empty block {r:?}"));
            }
            Ok((a, b))
        })
        .collect()
}

/// A point given by a finite word followed by zeros forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn symbol(&self, i: u64) -> u8 {
        usize::try_from(i).ok().and_then(|i| self.0.get(i)).copied().unwrap_or(0)
    }

    /// `d(σ^t x, x)`.
    pub fn return_distance(&self, t: u64) -> Distance {
        let len = self.0.len() as u64;
        // Past `len` both σ^t x and x read zeros.
        (0..len).find(|&i| self.symbol(t + i) != self.symbol(i)).map_or(Distance::Zero, Distance::Dyadic)
    }

    /// `d(σ^t x, σ^t y)`.
    pub fn orbit_distance(&self, other: &Word, t: u64) -> Distance {
        let len = self.0.len().max(other.0.len()) as u64;
        (t..len.max(t))
            .find(|&i| self.symbol(i) != other.symbol(i))
            .map_or(Distance::Zero, |g| Distance::Dyadic(g - t))
    }
}

/// Points over `{0..m-1}` laid out in alternating agree/disagree blocks.
///
/// On odd-numbered blocks (1st, 3rd, ...) every member writes 0; on
/// even-numbered blocks member `q` writes `q`. Any two distinct members
/// therefore disagree exactly on the even-numbered blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockFamily {
    pub alphabet_size: u32,
    pub block_lengths: Vec<u64>,
    pub members: usize,
}

impl BlockFamily {
    pub fn new(alphabet_size: u32, block_lengths: Vec<u64>, members: usize) -> Result<Self> {
        if alphabet_size < 2 {
            return invalid("alphabet size must be at least 2");
        }
        if members > alphabet_size as usize {
            return invalid(format!("{members} members need an alphabet of at least {members} symbols"));
        }
        if block_lengths.contains(&0) {
            return invalid("block lengths must be positive");
        }
        Ok(Self {
            alphabet_size,
            block_lengths,
            members,
        })
    }

    /// Block lengths `base^1, ..., base^count`.
    pub fn geometric(alphabet_size: u32, members: usize, base: u64, count: u32) -> Result<Self> {
        if base < 2 {
            return invalid("block growth base must be at least 2");
        }
        let lengths = (1..=count)
            .map(|k| base.checked_pow(k).ok_or_else(|| Error::InvalidArgument("block length overflows".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet_size, lengths, members)
    }

    /// Cumulative block ends `E_1 < E_2 < ...`.
    pub fn boundaries(&self) -> Vec<u64> {
        self.block_lengths
            .iter()
            .scan(0u64, |acc, &l| {
                *acc += l;
                Some(*acc)
            })
            .collect()
    }

    pub fn total_length(&self) -> u64 {
        self.block_lengths.iter().sum()
    }

    /// Half-open extents of the even-numbered (disagreement) blocks.
    pub fn disagreement_blocks(&self) -> Vec<(u64, u64)> {
        let mut start = 0;
        let mut out = Vec::new();
        for (i, &l) in self.block_lengths.iter().enumerate() {
            if i % 2 == 1 {
                out.push((start, start + l));
            }
            start += l;
        }
        out
    }

    pub fn symbol(&self, member: usize, position: u64) -> u8 {
        let mut start = 0;
        for (i, &l) in self.block_lengths.iter().enumerate() {
            if position < start + l {
                return if i % 2 == 1 { member as u8 } else { 0 };
            }
            start += l;
        }
        0
    }

    pub fn word(&self, member: usize) -> Word {
        Word((0..self.total_length()).map(|p| self.symbol(member, p)).collect())
    }

    pub fn pair(&self, a: usize, b: usize) -> Result<ShiftPair> {
        if a >= self.members || b >= self.members {
            return invalid(format!("member index out of range (family has {})", self.members));
        }
        let blocks = if a == b { Vec::new() } else { self.disagreement_blocks() };
        ShiftPair::new(self.alphabet_size, blocks, None)
    }

    /// All unordered pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> Vec<(usize, usize, ShiftPair)> {
        let mut out = Vec::new();
        for a in 0..self.members {
            for b in a + 1..self.members {
                out.push((a, b, self.pair(a, b).expect("indices in range")));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let id = ShiftPair::identical(2).unwrap();
        assert_eq!(id.distance(17), Distance::Zero);
        let p = ShiftPair::new(2, vec![(5, 10)], None).unwrap();
        assert_eq!(p.distance(5), Distance::Dyadic(0));
        assert_eq!(p.distance(0), Distance::Dyadic(5));
        assert_eq!(p.distance(9), Distance::Dyadic(0));
        assert_eq!(p.distance(10), Distance::Zero);
        let full = ShiftPair::fully_disagreeing(3).unwrap();
        assert!((0..50).all(|n| full.distance(n) == Distance::Dyadic(0)));
    }

    #[test]
    fn periodic_tail_repeats() {
        // Agree 5, disagree 5, repeating from 0.
        let p = ShiftPair::new(2, vec![(5, 10)], Some(PeriodicTail { offset: 0, period: 10 })).unwrap();
        assert_eq!(p.distance(12), Distance::Dyadic(3));
        assert_eq!(p.distance(17), Distance::Dyadic(0));
        assert_eq!(p.distance(10_000_003), Distance::Dyadic(2));
        assert_eq!(p.blocks_until(32), vec![(5, 10), (15, 20), (25, 30)]);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ShiftPair::new(1, vec![], None).is_err());
        assert!(ShiftPair::new(2, vec![(0, 5), (3, 7)], None).is_err());
        assert!(ShiftPair::new(2, vec![(0, 50)], Some(PeriodicTail { offset: 0, period: 10 })).is_err());
        assert!(BlockFamily::new(2, vec![1, 1], 3).is_err());
        assert!(BlockFamily::new(3, vec![1, 0], 2).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = ShiftPair::new(3, vec![(2, 4), (7, 9)], Some(PeriodicTail { offset: 5, period: 4 })).unwrap();
        let back: ShiftPair = p.to_string().parse().unwrap();
        assert_eq!(back, p);
        assert!("alphabet = 2\nblocks = 3..1".parse::<ShiftPair>().is_err());
    }

    #[test]
    fn block_family_small_case() {
        let fam = BlockFamily::new(2, vec![1, 1], 2).unwrap();
        let pair = fam.pair(0, 1).unwrap();
        assert_eq!(pair.blocks(), &[(1, 2)]);
        assert_eq!(pair.distance(0), Distance::Dyadic(1));
        assert_eq!(pair.distance(1), Distance::Dyadic(0));
        assert!(BlockFamily::new(3, vec![4, 16], 1).unwrap().pairs().is_empty());
    }

    #[test]
    fn block_family_pairs_share_disagreement_set() {
        let fam = BlockFamily::geometric(3, 3, 4, 6).unwrap();
        let words: Vec<Word> = (0..3).map(|q| fam.word(q)).collect();
        for (a, b, pair) in fam.pairs() {
            assert_eq!(pair.blocks(), fam.disagreement_blocks().as_slice());
            let from_words = ShiftPair::from_words(3, &words[a].0, &words[b].0).unwrap();
            assert_eq!(from_words, pair);
        }
    }

    #[test]
    fn word_distances() {
        let x = Word(vec![1, 0, 0, 1, 0, 0]);
        assert_eq!(x.return_distance(3), Distance::Dyadic(3));
        assert_eq!(x.return_distance(6), Distance::Dyadic(0));
        let y = Word(vec![2, 0, 0, 1]);
        assert_eq!(x.orbit_distance(&y, 0), Distance::Dyadic(0));
        assert_eq!(x.orbit_distance(&y, 1), Distance::Zero);
    }

    fn arb_pair() -> impl Strategy<Value = ShiftPair> {
        (
            prop::collection::vec((0u64..30, 1u64..20), 0..8),
            prop::option::of((0u64..40, 1u64..25)),
        )
            .prop_filter_map("valid", |(gaps, tail)| {
                let mut blocks = Vec::new();
                let mut pos = 0;
                for (gap, len) in gaps {
                    pos += gap + 1;
                    blocks.push((pos, pos + len));
                    pos += len;
                }
                let tail = tail.map(|(extra, period)| PeriodicTail { offset: pos + extra, period });
                if let Some(t) = tail {
                    // Put one block into the pattern.
                    let a = t.offset + t.period / 3;
                    blocks.push((a, (a + 1 + t.period / 4).min(t.offset + t.period)));
                }
                ShiftPair::new(2, blocks, tail).ok()
            })
    }

    proptest! {
        #[test]
        fn metric_matches_materialized_strings(pair in arb_pair()) {
            // Brute force over symbol strings: x = 0..., y differs exactly on the set.
            let len = 2_000u64;
            let bits = {
                let mut v = vec![false; len as usize + 200];
                for (a, b) in pair.blocks_until(len + 200) {
                    for p in a..b { v[p as usize] = true; }
                }
                v
            };
            for n in 0..len {
                let brute = (n..len + 200).find(|&p| bits[p as usize]);
                let expect = match brute {
                    Some(g) => Distance::Dyadic(g - n),
                    None if pair.tail().is_some_and(|t| pair.pattern(t).next().is_some()) => unreachable!(),
                    None => Distance::Zero,
                };
                prop_assert_eq!(pair.distance(n), expect);
            }
        }

        #[test]
        fn shift_commutes_with_time(pair in arb_pair(), k in 0u64..120, n in 0u64..400) {
            prop_assert_eq!(pair.distance(n + k), pair.shifted(k).distance(n));
        }
    }
}
