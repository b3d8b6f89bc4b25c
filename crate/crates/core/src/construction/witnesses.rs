use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{invalid, Clause, Error, Result};
use crate::systems::{Distance, OrbitPair};

/// Slack granted to floating-point distances when re-verifying witness times.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// How the distal threshold of each pair is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaPolicy {
    Fixed(f64),
    /// Half the largest distance seen in the first tenth of the search budget.
    Adaptive,
}

/// Proximal and distal times for one pair of points `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairWitness {
    pub i: usize,
    pub j: usize,
    pub delta: f64,
    /// The k-th time (one-based) has distance `< 2^-k`.
    pub proximal: Vec<u64>,
    /// Every time has distance `> delta`.
    pub distal: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WitnessSequences {
    pub pairs: Vec<PairWitness>,
}

/// Proximal precision schedule: the k-th witness (one-based) must satisfy `d < 2^-k`.
fn proximal_ok(d: Distance, k: usize, tolerance: f64) -> bool {
    match d {
        Distance::Real(x) => Distance::Real((x - tolerance).max(0.0)).below_pow2(k as u64),
        d => d.below_pow2(k as u64),
    }
}

fn distal_ok(d: Distance, delta: f64, tolerance: f64) -> bool {
    match d {
        Distance::Real(x) => x + tolerance > delta,
        d => d.gt(delta),
    }
}

/// Scans times `1..=search_budget` of every pair for Li-Yorke witnesses.
///
/// Each clause collects at most `max_count` times and must reach `min_count`.
pub fn extract_witnesses<P: OrbitPair>(
    pairs: &[(usize, usize, P)],
    policy: DeltaPolicy,
    search_budget: u64,
    min_count: usize,
    max_count: usize,
) -> Result<WitnessSequences> {
    if search_budget == 0 {
        return invalid("search budget must be positive");
    }
    if min_count == 0 || max_count < min_count {
        return invalid("need 1 <= min_count <= max_count");
    }
    if let DeltaPolicy::Fixed(d) = policy {
        if !(d > 0.0) {
            return invalid(format!("δ = {d} must be positive"));
        }
    }
    if let Some((i, j, _)) = pairs.iter().find(|(i, j, _)| i == j) {
        return invalid(format!("pair ({i}, {j}) is not a pair of distinct points"));
    }
    let found: Vec<PairWitness> = pairs
        .par_iter()
        .map(|(i, j, pair)| extract_one(*i, *j, pair, policy, search_budget, min_count, max_count))
        .collect::<Result<_>>()?;
    Ok(WitnessSequences { pairs: found })
}

fn extract_one<P: OrbitPair>(
    i: usize,
    j: usize,
    pair: &P,
    policy: DeltaPolicy,
    budget: u64,
    min_count: usize,
    max_count: usize,
) -> Result<PairWitness> {
    let delta = match policy {
        DeltaPolicy::Fixed(d) => d,
        DeltaPolicy::Adaptive => {
            let mut sup = 0.0f64;
            pair.scan(1, (budget / 10).max(1), &mut |_, d| {
                sup = sup.max(d.to_f64());
                true
            })?;
            sup / 2.0
        }
    };
    let mut proximal = Vec::new();
    let mut distal = Vec::new();
    pair.scan(1, budget, &mut |n, d| {
        if proximal.len() < max_count && d.below_pow2(proximal.len() as u64 + 1) {
            proximal.push(n);
        }
        // With δ = 0 (adaptive on a diagonal pair) nothing is distal.
        if distal.len() < max_count && delta > 0.0 && d.gt(delta) {
            distal.push(n);
        }
        proximal.len() < max_count || distal.len() < max_count
    })?;
    if proximal.len() < min_count {
        return Err(Error::BudgetExhausted(i, j, Clause::Proximal, proximal.len(), min_count));
    }
    if distal.len() < min_count {
        return Err(Error::BudgetExhausted(i, j, Clause::Distal, distal.len(), min_count));
    }
    Ok(PairWitness {
        i,
        j,
        delta,
        proximal,
        distal,
    })
}

impl PairWitness {
    /// First witness time that fails its clause, if any.
    pub fn first_invalid<P: OrbitPair + ?Sized>(&self, pair: &P) -> Result<Option<(Clause, u64)>> {
        for (k, &t) in self.proximal.iter().enumerate() {
            if !proximal_ok(pair.distance_at(t)?, k + 1, FLOAT_TOLERANCE) {
                return Ok(Some((Clause::Proximal, t)));
            }
        }
        for &t in &self.distal {
            if !distal_ok(pair.distance_at(t)?, self.delta, FLOAT_TOLERANCE) {
                return Ok(Some((Clause::Distal, t)));
            }
        }
        Ok(None)
    }
}

impl WitnessSequences {
    pub fn get(&self, i: usize, j: usize) -> Option<&PairWitness> {
        self.pairs.iter().find(|w| (w.i, w.j) == (i, j))
    }

    /// Re-verifies every time against the pair it belongs to.
    pub fn verify<P: OrbitPair>(&self, pairs: &[(usize, usize, P)]) -> Result<Vec<(usize, usize, Clause, u64)>> {
        let mut bad = Vec::new();
        for w in &self.pairs {
            let Some((_, _, pair)) = pairs.iter().find(|(i, j, _)| (*i, *j) == (w.i, w.j)) else {
                return invalid(format!("no system pair for witness ({}, {})", w.i, w.j));
            };
            if let Some((clause, t)) = w.first_invalid(pair)? {
                bad.push((w.i, w.j, clause, t));
            }
        }
        Ok(bad)
    }

    /// Section-per-pair text format.
    pub fn write_to(&self, mut w: impl Write, header: &[String]) -> Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for p in &self.pairs {
            let join = |ts: &[u64]| {
                let mut s = String::with_capacity(ts.len() * 8);
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        s.push(' ');
                    }
                    write!(s, "{t}").expect("writing to a string");
                }
                s
            };
            writeln!(w, "[pair {} {}]", p.i, p.j)?;
            writeln!(w, "delta = {}", p.delta)?;
            writeln!(w, "proximal = {}", join(&p.proximal))?;
            writeln!(w, "distal = {}", join(&p.distal))?;
        }
        Ok(())
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut pairs: Vec<PairWitness> = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |msg: String| Error::Parse { line: n + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("[pair").and_then(|r| r.strip_suffix(']')) {
                let ids: Vec<usize> = rest
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| perr(format!("bad point index {v:?}"))))
                    .collect::<Result<_>>()?;
                let [i, j] = ids[..] else {
                    return Err(perr("section header needs two point indices".into()));
                };
                pairs.push(PairWitness {
                    i,
                    j,
                    delta: 0.0,
                    proximal: Vec::new(),
                    distal: Vec::new(),
                });
                continue;
            }
            let current = pairs.last_mut().ok_or_else(|| perr("entry before any [pair i j] section".into()))?;
            let (key, value) = line.split_once('=').ok_or_else(|| perr(format!("expected key = value, got {line:?}")))?;
            let times = || -> Result<Vec<u64>> {
                let ts: Vec<u64> = value
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| perr(format!("bad time {v:?}"))))
                    .collect::<Result<_>>()?;
                if ts.first() == Some(&0) || ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(perr("times must be positive and strictly increasing".into()));
                }
                Ok(ts)
            };
            match key.trim() {
                "delta" => {
                    current.delta = value.trim().parse().map_err(|_| perr(format!("bad delta {value:?}")))?;
                }
                "proximal" => current.proximal = times()?,
                "distal" => current.distal = times()?,
                other => return Err(perr(format!("unknown key {other:?}"))),
            }
        }
        Ok(Self { pairs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::clearance;
    use crate::systems::{BlockFamily, IntervalMap, IntervalPair, ShiftPair};

    #[test]
    fn block_family_witnesses_land_where_predicted() {
        let fam = BlockFamily::geometric(3, 3, 4, 8).unwrap();
        let pairs = fam.pairs();
        let w = extract_witnesses(&pairs, DeltaPolicy::Fixed(0.5), fam.total_length(), 10, 10).unwrap();
        assert_eq!(w.pairs.len(), 3);
        assert!(w.verify(&pairs).unwrap().is_empty());
        let dis = fam.disagreement_blocks();
        for p in &w.pairs {
            // Distal times are exactly the first ten disagreeing positions >= 1.
            let expect: Vec<u64> = dis.iter().flat_map(|&(a, b)| a..b).filter(|&t| t >= 1).take(10).collect();
            assert_eq!(p.distal, expect);
            // The k-th proximal time is the first later time whose next
            // disagreement is more than k steps away.
            let mut t = 0;
            for (k, &got) in p.proximal.iter().enumerate() {
                let need = clearance(crate::systems::pow2_neg(k as u64 + 1)) + 1;
                t = (t + 1..)
                    .find(|&s| !dis.iter().any(|&(a, b)| a < s + need && s < b))
                    .unwrap();
                assert_eq!(got, t);
            }
        }
    }

    #[test]
    fn diagonal_exhausts_distal_clause() {
        let pairs = vec![(0, 1, ShiftPair::identical(2).unwrap())];
        for policy in [DeltaPolicy::Fixed(0.5), DeltaPolicy::Adaptive] {
            let err = extract_witnesses(&pairs, policy, 1_000, 5, 5).unwrap_err();
            assert!(matches!(err, Error::BudgetExhausted(0, 1, Clause::Distal, 0, 5)));
        }
        let far = vec![(0, 1, ShiftPair::fully_disagreeing(2).unwrap())];
        let err = extract_witnesses(&far, DeltaPolicy::Fixed(0.5), 1_000, 5, 5).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted(0, 1, Clause::Proximal, 0, 5)));
    }

    #[test]
    fn tent_map_witnesses_reverify() {
        let map = IntervalMap::tent(2.0).unwrap();
        let pairs = vec![(0, 1, IntervalPair::new(map, 0.213_4, 0.771_9, 1_000_000).unwrap())];
        // Success is not guaranteed; validity of whatever comes back is.
        match extract_witnesses(&pairs, DeltaPolicy::Fixed(0.3), 1_000_000, 3, 20) {
            Ok(w) => assert!(w.verify(&pairs).unwrap().is_empty()),
            Err(e) => assert!(matches!(e, Error::BudgetExhausted(..))),
        }
    }

    #[test]
    fn adaptive_delta_is_half_the_early_sup() {
        let fam = BlockFamily::geometric(2, 2, 4, 6).unwrap();
        let pairs = vec![(0, 1, fam.pair(0, 1).unwrap())];
        let w = extract_witnesses(&pairs, DeltaPolicy::Adaptive, fam.total_length(), 3, 50).unwrap();
        assert_eq!(w.pairs[0].delta, 0.5);
    }

    #[test]
    fn text_format_round_trip() {
        let w = WitnessSequences {
            pairs: vec![
                PairWitness { i: 0, j: 1, delta: 0.5, proximal: vec![1, 5, 9], distal: vec![2, 3] },
                PairWitness { i: 0, j: 2, delta: 0.25, proximal: vec![7], distal: vec![8, 100] },
            ],
        };
        let mut buf = Vec::new();
        w.write_to(&mut buf, &["test".into()]).unwrap();
        assert_eq!(WitnessSequences::read_from(buf.as_slice()).unwrap(), w);
        let bad = "[pair 0 1]\nproximal = 3 2\n";
        assert!(matches!(WitnessSequences::read_from(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(WitnessSequences::read_from("delta = 1\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let pairs = vec![(1, 1, ShiftPair::identical(2).unwrap())];
        assert!(extract_witnesses(&pairs, DeltaPolicy::Fixed(0.5), 10, 1, 1).is_err());
        let ok = vec![(0, 1, ShiftPair::identical(2).unwrap())];
        assert!(extract_witnesses(&ok, DeltaPolicy::Fixed(0.0), 10, 1, 1).is_err());
        assert!(extract_witnesses(&ok, DeltaPolicy::Fixed(0.5), 10, 3, 2).is_err());
    }
}
