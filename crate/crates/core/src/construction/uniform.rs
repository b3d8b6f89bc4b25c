use std::collections::BTreeSet;

use super::pipeline::{merge_and_classify, SequenceReport};
use crate::distribution::DistributionConfig;
use crate::error::{invalid, Error, Result};
use crate::index_seq::{IndexSequence, MergeConfig};
use crate::systems::{pow2_neg, ShiftPair, Word};

/// A time at which a level is claimed to be within `2^-precision`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Claim {
    pub time: u64,
    pub precision: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessLevel {
    /// Indices into the witness points; each level contains the previous one.
    pub members: Vec<usize>,
    /// At each claim, every pair of members is within `2^-precision`.
    pub proximal: Vec<Claim>,
    /// At each claim, every member is within `2^-precision` of its start.
    pub rigidity: Vec<Claim>,
}

/// Nested finite point sets in a shift, each uniformly proximal and
/// uniformly rigid at the claimed times.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformChaoticWitness {
    pub alphabet_size: u32,
    pub points: Vec<Word>,
    pub levels: Vec<WitnessLevel>,
}

fn all_pairs(members: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    members
        .iter()
        .enumerate()
        .flat_map(move |(k, &a)| members[k + 1..].iter().map(move |&b| (a, b)))
}

impl UniformChaoticWitness {
    fn pair(&self, a: usize, b: usize) -> Result<ShiftPair> {
        ShiftPair::from_words(self.alphabet_size, &self.points[a].0, &self.points[b].0)
    }

    /// Checks nesting and re-measures every claimed time.
    pub fn verify(&self) -> Result<()> {
        if self.levels.is_empty() {
            return invalid("witness has no levels");
        }
        let mut previous: BTreeSet<usize> = BTreeSet::new();
        for (n, level) in self.levels.iter().enumerate() {
            let set: BTreeSet<usize> = level.members.iter().copied().collect();
            if set.len() != level.members.len() || set.len() < 2 {
                return invalid(format!("level {} needs at least two distinct points", n + 1));
            }
            if let Some(&bad) = set.iter().find(|&&p| p >= self.points.len()) {
                return invalid(format!("level {} names point {bad}, only {} exist", n + 1, self.points.len()));
            }
            if !previous.is_subset(&set) {
                return invalid(format!("level {} does not contain level {}", n + 1, n));
            }
            if level.proximal.iter().chain(&level.rigidity).any(|c| c.time == 0) {
                return invalid(format!("level {} claims time 0; times start at 1", n + 1));
            }
            let pairs: Vec<ShiftPair> = all_pairs(&level.members)
                .map(|(a, b)| self.pair(a, b))
                .collect::<Result<_>>()?;
            for c in &level.proximal {
                for p in &pairs {
                    let d = p.distance(c.time);
                    if !d.below_pow2(c.precision as u64) {
                        return Err(Error::WitnessInvalid {
                            level: n + 1,
                            time: c.time,
                            precision: c.precision,
                            measured: d.to_string(),
                        });
                    }
                }
            }
            for c in &level.rigidity {
                for &x in &level.members {
                    let d = self.points[x].return_distance(c.time);
                    if !d.below_pow2(c.precision as u64) {
                        return Err(Error::WitnessInvalid {
                            level: n + 1,
                            time: c.time,
                            precision: c.precision,
                            measured: d.to_string(),
                        });
                    }
                }
            }
            previous = set;
        }
        Ok(())
    }

    pub fn top_members(&self) -> &[usize] {
        &self.levels.last().expect("verified witness has levels").members
    }

    /// `P_N` and `S_N` for level `n` (zero-based): the claimed times, sorted.
    pub fn level_sequences(&self, n: usize) -> Result<(IndexSequence, IndexSequence)> {
        let times = |cs: &[Claim]| {
            let set: BTreeSet<u64> = cs.iter().map(|c| c.time).collect();
            IndexSequence::from_terms(set.into_iter().collect())
        };
        let level = &self.levels[n];
        Ok((times(&level.proximal)?, times(&level.rigidity)?))
    }
}

/// Distances along rigidity times compared with the starting separation.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnCheck {
    pub i: usize,
    pub j: usize,
    /// `d(x, y)`.
    pub initial: f64,
    /// Rigidity claims checked: `d(σ^m x, σ^m y) >= d(x, y) - 2·2^-k`.
    pub rigidity_checked: usize,
    pub rigidity_violations: usize,
    /// Proximal claims checked: `d(σ^m x, σ^m y) < 2^-k`.
    pub proximal_checked: usize,
    pub proximal_violations: usize,
}

#[derive(Clone, Debug)]
pub struct UniformReport {
    pub sequence: SequenceReport,
    pub returns: Vec<ReturnCheck>,
}

/// Verifies the witness, merges every `P_N` and `S_N` into Q, checks the
/// return-to-separation behaviour along rigidity times, and classifies each
/// top-level pair along Q with `δ = d(x, y) / 2`.
pub fn uniform_chaotic_to_sequence(
    witness: &UniformChaoticWitness,
    horizon: usize,
    merge: &MergeConfig,
    config: &DistributionConfig,
) -> Result<UniformReport> {
    witness.verify()?;
    let mut members = Vec::with_capacity(2 * witness.levels.len());
    for n in 0..witness.levels.len() {
        let (p, s) = witness.level_sequences(n)?;
        members.push((format!("P{}", n + 1), p));
        members.push((format!("S{}", n + 1), s));
    }
    let mut pairs = Vec::new();
    let mut returns = Vec::new();
    for (a, b) in all_pairs(witness.top_members()) {
        let pair = witness.pair(a, b)?;
        let initial = pair.distance(0).to_f64();
        let mut check = ReturnCheck {
            i: a,
            j: b,
            initial,
            rigidity_checked: 0,
            rigidity_violations: 0,
            proximal_checked: 0,
            proximal_violations: 0,
        };
        for level in witness.levels.iter().filter(|l| l.members.contains(&a) && l.members.contains(&b)) {
            for c in &level.rigidity {
                check.rigidity_checked += 1;
                let slack = 2.0 * pow2_neg(c.precision as u64);
                if pair.distance(c.time).to_f64() < initial - slack {
                    check.rigidity_violations += 1;
                }
            }
            for c in &level.proximal {
                check.proximal_checked += 1;
                if !pair.distance(c.time).below_pow2(c.precision as u64) {
                    check.proximal_violations += 1;
                }
            }
        }
        returns.push(check);
        pairs.push((a, b, pair, initial / 2.0));
    }
    let sequence = merge_and_classify(members, &pairs, horizon, merge, config)?;
    Ok(UniformReport { sequence, returns })
}

/// Shape of a synthetic shift witness.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLayout {
    pub points: usize,
    /// Each point opens with this many copies of its own symbol.
    pub run: u64,
    /// Level `N` copies the first `run + (N - 1)·unit_growth` symbols of each point.
    pub unit_growth: u64,
    /// Proximal claims weaker than this are not recorded.
    pub min_precision: u32,
    /// Per level: zero-block length and number of prefix copies.
    pub levels: Vec<(u64, u64)>,
}

impl SyntheticLayout {
    /// Two levels on three points, sized so a horizon of 20000 reaches the
    /// fourth merge stage.
    pub fn two_level() -> Self {
        Self {
            points: 3,
            run: 24,
            unit_growth: 32,
            min_precision: 20,
            levels: vec![(64, 200), (10_100, 10_300)],
        }
    }
}

/// Builds points `x^0, x^1, ...` with `x^q` writing symbol `q + 1` in its
/// own blocks, laid out as
/// `run · (zeros(A_1) · copies_1) · (zeros(A_2) · copies_2) · ...`.
///
/// All points share the layout, so inside a zero block every pair agrees up
/// to the block end (proximal claims) and at the start of each prefix copy
/// every point agrees with its own beginning (rigidity claims). Level `N`
/// holds the first `N + 1` points.
pub fn synthetic_uniform_witness(layout: &SyntheticLayout) -> Result<UniformChaoticWitness> {
    let levels = layout.levels.len();
    if layout.points < 2 || layout.points > 255 {
        return invalid("synthetic witness needs between 2 and 255 points");
    }
    if levels == 0 || levels + 1 > layout.points {
        return invalid(format!("{levels} levels need at least {} points", levels + 1));
    }
    if layout.run == 0 {
        return invalid("opening run must be non-empty");
    }
    let first_zero = layout.levels[0].0;
    if (levels as u64 - 1) * layout.unit_growth > first_zero {
        return invalid("copied prefixes must stay inside the opening run and first zero block");
    }
    let mut words: Vec<Vec<u8>> = (0..layout.points).map(|q| vec![q as u8 + 1; layout.run as usize]).collect();
    let mut witness_levels = Vec::with_capacity(levels);
    for (n, &(zeros, copies)) in layout.levels.iter().enumerate() {
        let start = words[0].len() as u64;
        let proximal: Vec<Claim> = (0..zeros)
            .filter_map(|j| {
                let precision = (zeros - j - 1) as u32;
                (precision >= layout.min_precision).then_some(Claim {
                    time: start + j,
                    precision,
                })
            })
            .collect();
        for w in &mut words {
            w.resize(w.len() + zeros as usize, 0);
        }
        let unit = layout.run + n as u64 * layout.unit_growth;
        let copy_start = words[0].len() as u64;
        let rigidity: Vec<Claim> = (0..copies)
            .map(|c| Claim {
                time: copy_start + c * unit,
                precision: (unit - 1) as u32,
            })
            .collect();
        for w in &mut words {
            let prefix = w[..unit as usize].to_vec();
            for _ in 0..copies {
                w.extend_from_slice(&prefix);
            }
        }
        witness_levels.push(WitnessLevel {
            members: (0..n + 2).collect(),
            proximal,
            rigidity,
        });
    }
    Ok(UniformChaoticWitness {
        alphabet_size: layout.points as u32 + 1,
        points: words.into_iter().map(Word).collect(),
        levels: witness_levels,
    })
}
