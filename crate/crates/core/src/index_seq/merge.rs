//! Staged round-robin construction of a sequence Q in which every member
//! S_i of a family has relative upper density one.
//!
//! Stage `j` picks a member `i` and appends the next `L` terms of `S_i` above
//! `max(Q)`, with `L` the least length making `#(S_i ∩ Q) / |Q|` reach the
//! stage target `1 - 1/max(j, J0)`. Each member is visited infinitely often
//! and the targets tend to one, so every member has upper density one.
//!
//! Q grows by roughly a factor `max(j, J0)` per stage, so the plan is kept
//! symbolically (arbitrary-precision run lengths and exact overlap counts)
//! and only the first `target_horizon` terms are ever materialized.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use super::{IndexSequence, Rule};
use crate::error::{invalid, Error, Result};

/// Enumeration is used for overlaps that have no closed form; beyond this
/// many candidate terms the overlap is rejected as not computable.
const ENUMERATION_CAP: u64 = 50_000_000;

/// Order in which stages visit family members.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Enrollment {
    /// Stage `j` uses member `(j - 1) mod r`.
    RoundRobin,
    /// Member `j` joins at stage `j`'s round: 0; 0,1; 0,1,2; ...
    Diagonal,
}

#[derive(Clone, Debug)]
pub struct MergeConfig {
    /// Floor `J0` on the stage target denominator: stage `j` aims for
    /// `1 - 1/max(j, J0)`. `J0 = 1` is the bare `1 - 1/j` schedule.
    pub min_target_denominator: u64,
    pub enrollment: Enrollment,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            min_target_denominator: 100,
            enrollment: Enrollment::RoundRobin,
        }
    }
}

/// When the planner stops.
#[derive(Clone, Copy, Debug)]
pub enum StopRule {
    /// Stop once Q has this many terms; the last run is truncated to fit.
    Terms(u64),
    /// Run exactly this many complete stages.
    Stages(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeStage {
    /// One-based stage counter `j`.
    pub stage: usize,
    pub member: usize,
    /// Stage target is `(d - 1) / d`.
    pub target_denominator: u64,
    /// Zero-based index in the member of the first appended term.
    pub member_start: BigUint,
    pub length: BigUint,
    pub first_term: BigUint,
    pub last_term: BigUint,
    /// |Q| after this stage.
    pub checkpoint: BigUint,
    /// `#(S_k ∩ Q)` after this stage, for every enrolled member k.
    pub counts: Vec<BigUint>,
    pub truncated: bool,
}

impl MergeStage {
    /// Exact fraction of Q (so far) lying in the stage's member.
    pub fn fraction(&self) -> Ratio<BigUint> {
        Ratio::new(self.counts[self.member].clone(), self.checkpoint.clone())
    }

    pub fn fraction_of(&self, member: usize) -> Option<Ratio<BigUint>> {
        self.counts
            .get(member)
            .map(|c| Ratio::new(c.clone(), self.checkpoint.clone()))
    }

    pub fn meets_target(&self) -> bool {
        let d = BigUint::from(self.target_denominator);
        // counts/q >= (d-1)/d  <=>  d*counts >= (d-1)*q
        &d * &self.counts[self.member] >= (d - 1u32) * &self.checkpoint
    }
}

#[derive(Clone, Debug, Default)]
pub struct MergePlan {
    pub stages: Vec<MergeStage>,
}

impl MergePlan {
    pub fn len(&self) -> BigUint {
        self.stages.last().map(|s| s.checkpoint.clone()).unwrap_or_default()
    }
}

#[derive(Clone, Debug)]
pub struct MergeResult {
    /// First `target_horizon` terms of Q.
    pub sequence: IndexSequence,
    pub plan: MergePlan,
}

/// Builds Q from a finite family and materializes its first `target_horizon` terms.
pub fn merge_density_one(
    family: &[IndexSequence],
    target_horizon: usize,
    config: &MergeConfig,
) -> Result<MergeResult> {
    merge_countable(family.iter().cloned(), target_horizon, config)
}

/// Like [`merge_density_one`] but pulls members from an iterator as the
/// enrollment schedule first needs them, so countable families work.
pub fn merge_countable(
    family: impl IntoIterator<Item = IndexSequence>,
    target_horizon: usize,
    config: &MergeConfig,
) -> Result<MergeResult> {
    if target_horizon == 0 {
        return invalid("target horizon must be positive");
    }
    let mut planner = Planner::new(family, config)?;
    planner.run(StopRule::Terms(target_horizon as u64))?;
    let terms = planner.materialize(target_horizon)?;
    Ok(MergeResult {
        sequence: IndexSequence::from_terms(terms)?,
        plan: MergePlan {
            stages: planner.stages,
        },
    })
}

/// Symbolic plan only; nothing is materialized.
pub fn plan_merge(family: &[IndexSequence], stop: StopRule, config: &MergeConfig) -> Result<MergePlan> {
    let mut planner = Planner::new(family.iter().cloned(), config)?;
    planner.run(stop)?;
    Ok(MergePlan {
        stages: planner.stages,
    })
}

struct Planner<I: Iterator<Item = IndexSequence>> {
    source: I,
    exhausted: bool,
    members: Vec<IndexSequence>,
    config: MergeConfig,
    stages: Vec<MergeStage>,
    len: BigUint,
    last: Option<BigUint>,
    counts: Vec<BigUint>,
    pending_error: Option<Error>,
}

impl<I: Iterator<Item = IndexSequence>> Planner<I> {
    fn new(family: impl IntoIterator<IntoIter = I>, config: &MergeConfig) -> Result<Self> {
        if config.min_target_denominator == 0 {
            return invalid("target denominator floor must be at least 1");
        }
        let mut p = Self {
            source: family.into_iter(),
            exhausted: false,
            members: Vec::new(),
            config: config.clone(),
            stages: Vec::new(),
            len: BigUint::zero(),
            last: None,
            counts: Vec::new(),
            pending_error: None,
        };
        if !p.enroll_next() {
            return invalid("merge family must be nonempty");
        }
        Ok(p)
    }

    fn enroll_next(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        match self.source.next() {
            Some(s) => {
                self.members.push(s);
                // Earlier runs may already contain terms of the newcomer.
                let new = self.members.len() - 1;
                let mut cumulative = Vec::with_capacity(self.stages.len());
                let mut c = BigUint::zero();
                for st in &self.stages {
                    let run = Run::of(&self.members[st.member], st);
                    match overlap(&run, &self.members[new]) {
                        Ok(v) => c += v,
                        Err(e) => {
                            self.pending_error.get_or_insert(e);
                        }
                    }
                    cumulative.push(c.clone());
                }
                self.counts.push(c);
                for (st, c) in self.stages.iter_mut().zip(cumulative) {
                    st.counts.push(c);
                }
                true
            }
            None => {
                self.exhausted = true;
                false
            }
        }
    }

    /// Member visited at one-based stage `j`.
    fn member_for_stage(&mut self, j: usize) -> usize {
        match self.config.enrollment {
            Enrollment::RoundRobin => {
                while !self.exhausted {
                    self.enroll_next();
                }
                (j - 1) % self.members.len()
            }
            Enrollment::Diagonal => {
                // Round r (0-based) visits members 0..=r.
                let mut r = 0usize;
                let mut rem = j - 1;
                while rem > r {
                    rem -= r + 1;
                    r += 1;
                }
                while self.members.len() <= rem && self.enroll_next() {}
                rem.min(self.members.len() - 1)
            }
        }
    }

    fn run(&mut self, stop: StopRule) -> Result<()> {
        loop {
            let j = self.stages.len() + 1;
            match stop {
                StopRule::Stages(n) if j > n => return Ok(()),
                StopRule::Terms(h) if self.len >= BigUint::from(h) => return Ok(()),
                _ => {}
            }
            let i = self.member_for_stage(j);
            if let Some(e) = self.pending_error.take() {
                return Err(e);
            }
            let d = (j as u64).max(self.config.min_target_denominator);
            // (c + L) / (q + L) >= (d-1)/d  <=>  L >= (d-1) q - d c
            let need = BigInt::from(d - 1) * BigInt::from(self.len.clone())
                - BigInt::from(d) * BigInt::from(self.counts[i].clone());
            let mut length = need.to_biguint().unwrap_or_default().max(BigUint::one());
            let mut truncated = false;
            if let StopRule::Terms(h) = stop {
                let room = BigUint::from(h) - &self.len;
                if length > room {
                    length = room;
                    truncated = true;
                }
            }
            let member = &self.members[i];
            let start = match &self.last {
                None => BigUint::zero(),
                Some(v) => first_index_above(member, v).ok_or_else(|| stalled(i, v, &length))?,
            };
            let end_index = &start + &length - 1u32;
            let first_term = big_term(member, &start).ok_or_else(|| stalled(i, &self.last_or_zero(), &length))?;
            let last_term = big_term(member, &end_index).ok_or_else(|| stalled(i, &self.last_or_zero(), &length))?;
            let run = Run {
                member,
                start: start.clone(),
                length: length.clone(),
                lo: first_term.clone(),
                hi: last_term.clone(),
            };
            for k in 0..self.members.len() {
                let add = if k == i {
                    length.clone()
                } else {
                    overlap(&run, &self.members[k]).map_err(|e| match e {
                        Error::InvalidArgument(m) => {
                            Error::InvalidArgument(format!("stage {j}: overlap of member {i} with member {k}: {m}"))
                        }
                        other => other,
                    })?
                };
                self.counts[k] += add;
            }
            self.len += &length;
            self.last = Some(last_term.clone());
            self.stages.push(MergeStage {
                stage: j,
                member: i,
                target_denominator: d,
                member_start: start,
                length,
                first_term,
                last_term,
                checkpoint: self.len.clone(),
                counts: self.counts.clone(),
                truncated,
            });
        }
    }

    fn last_or_zero(&self) -> BigUint {
        self.last.clone().unwrap_or_default()
    }

    fn materialize(&self, n: usize) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(n);
        for st in &self.stages {
            let member = &self.members[st.member];
            let start = st.member_start.to_usize().ok_or_else(|| too_big("member index"))?;
            let len = st.length.to_usize().ok_or_else(|| too_big("run length"))?;
            let take = len.min(n - out.len());
            for k in start..start + take {
                out.push(member.term(k).ok_or_else(|| too_big("term"))?);
            }
            if out.len() == n {
                break;
            }
        }
        Ok(out)
    }
}

fn too_big(what: &str) -> Error {
    Error::InvalidArgument(format!("{what} exceeds the materializable range"))
}

fn stalled(member: usize, after: &BigUint, needed: &BigUint) -> Error {
    Error::ConstructionStalled {
        member,
        after: after.to_string(),
        needed: needed.to_string(),
    }
}

/// Consecutive terms `start .. start + length` of one member, spanning values `[lo, hi]`.
struct Run<'a> {
    member: &'a IndexSequence,
    start: BigUint,
    length: BigUint,
    lo: BigUint,
    hi: BigUint,
}

impl<'a> Run<'a> {
    fn of(member: &'a IndexSequence, st: &MergeStage) -> Self {
        Run {
            member,
            start: st.member_start.clone(),
            length: st.length.clone(),
            lo: st.first_term.clone(),
            hi: st.last_term.clone(),
        }
    }
}

fn ap(s: &IndexSequence) -> Option<(u64, u64)> {
    match s.rule() {
        Some(Rule::Arithmetic { first, step }) => Some((*first, *step)),
        _ => None,
    }
}

fn big_term(s: &IndexSequence, k: &BigUint) -> Option<BigUint> {
    if let Some((first, step)) = ap(s) {
        return Some(BigUint::from(first) + BigUint::from(step) * k);
    }
    s.term(k.to_usize()?).map(BigUint::from)
}

/// Zero-based index of the first term strictly greater than `v`.
fn first_index_above(s: &IndexSequence, v: &BigUint) -> Option<BigUint> {
    if let Some((first, step)) = ap(s) {
        let first = BigUint::from(first);
        if v < &first {
            return Some(BigUint::zero());
        }
        return Some((v - &first) / BigUint::from(step) + 1u32);
    }
    let v = v.to_u64()?.checked_add(1)?;
    s.first_index_at_least(v).map(BigUint::from)
}

/// Number of run terms that also belong to `other`. A run holds every term of
/// its member inside `[lo, hi]`, so this is `|member ∩ other ∩ [lo, hi]|`.
fn overlap(run: &Run<'_>, other: &IndexSequence) -> Result<BigUint> {
    if let (Some(a), Some(b)) = (ap(run.member), ap(other)) {
        return Ok(ap_overlap(a, b, &run.lo, &run.hi));
    }
    if let (Some(start), Some(len)) = (run.start.to_usize(), run.length.to_u64()) {
        if len <= ENUMERATION_CAP {
            let mut count = 0u64;
            for k in start..start + len as usize {
                let t = run.member.term(k).ok_or_else(|| too_big("run term"))?;
                count += other.contains(t) as u64;
            }
            return Ok(BigUint::from(count));
        }
    }
    // Long run: walk the other sequence across [lo, hi] instead.
    let (Some(lo), Some(hi)) = (run.lo.to_u64(), run.hi.to_u64()) else {
        return invalid("overlap range exceeds u64 and has no closed form");
    };
    let Some(mut k) = other.first_index_at_least(lo) else {
        return Ok(BigUint::zero());
    };
    let mut count = 0u64;
    let mut walked = 0u64;
    while let Some(t) = other.term(k) {
        if t > hi {
            break;
        }
        count += run.member.contains(t) as u64;
        walked += 1;
        if walked > ENUMERATION_CAP {
            return invalid("overlap needs too many terms to enumerate");
        }
        k += 1;
    }
    Ok(BigUint::from(count))
}

/// Number of common values of two progressions inside `[lo, hi]`.
fn ap_overlap(a: (u64, u64), b: (u64, u64), lo: &BigUint, hi: &BigUint) -> BigUint {
    let (a1, s1) = (a.0 as i128, a.1 as i128);
    let (a2, s2) = (b.0 as i128, b.1 as i128);
    let g = s1.gcd(&s2);
    if (a2 - a1).rem_euclid(g) != 0 {
        return BigUint::zero();
    }
    let l = s1 / g * s2;
    // Solve a1 + s1 t ≡ a2 (mod s2).
    let m = s2 / g;
    let inv = if m == 1 {
        0
    } else {
        let e = (s1 / g).extended_gcd(&m);
        e.x.rem_euclid(m)
    };
    let t0 = ((a2 - a1) / g).rem_euclid(m) * inv % m.max(1);
    let residue = (a1 + s1 * t0).rem_euclid(l) as u128;
    let floor = BigUint::from(a.0.max(b.0));
    let lo = lo.max(&floor).clone();
    if &lo > hi {
        return BigUint::zero();
    }
    let l = BigUint::from(l as u128);
    let r = BigUint::from(residue);
    // number of v <= x with v ≡ r (mod l)
    let upto = |x: &BigUint| -> BigUint {
        if x < &r {
            BigUint::zero()
        } else {
            (x - &r) / &l + 1u32
        }
    };
    let below = if lo.is_zero() { BigUint::zero() } else { upto(&(&lo - 1u32)) };
    upto(hi) - below
}
