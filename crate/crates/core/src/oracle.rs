//! Ground truth for block-structured shift pairs.
//!
//! Nothing here reuses the search structures of [`crate::systems::ShiftPair`]
//! or the counting passes of [`crate::distribution`]: the brute-force
//! evaluator materializes the disagreement set as a bit array, and the block
//! predictor counts qualifying positions block by block in closed form.

use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::frac::{self, Frac};
use crate::index_seq::IndexSequence;
use crate::systems::{pow2_neg, BlockFamily, PeriodicTail, ShiftPair};

/// Largest horizon the oracle is meant for.
pub const ORACLE_MAX_N: usize = 1_000_000;

/// Smallest `K` with `2^-K <= t`. A shift distance `2^-(g-m)` is `<= t`
/// exactly when the next disagreement `g` is at least `K` steps away.
pub fn clearance(t: f64) -> u64 {
    let mut k = 0;
    while pow2_neg(k) > t {
        k += 1;
    }
    k
}

/// Disagreement bits on `[0, len)`, unrolled from the raw block list.
fn disagreement_bits(pair: &ShiftPair, len: u64) -> Vec<bool> {
    let mut bits = vec![false; len as usize];
    let mut mark = |a: u64, b: u64| {
        for p in a.min(len)..b.min(len) {
            bits[p as usize] = true;
        }
    };
    for &(a, b) in pair.blocks() {
        mark(a, b);
    }
    if let Some(PeriodicTail { offset, period }) = pair.tail() {
        let first_end = offset + period;
        let pattern: Vec<(u64, u64)> = pair
            .blocks()
            .iter()
            .filter(|&&(_, b)| b > offset)
            .map(|&(a, b)| (a.max(offset) - offset, b - offset))
            .collect();
        let mut base = first_end;
        while base < len && !pattern.is_empty() {
            for &(a, b) in &pattern {
                mark(base + a, base + b);
            }
            base += period;
        }
    }
    bits
}

/// `Φⁿ(t)` by direct counting: `#{i <= n : no disagreement in [m_i, m_i + K)} / n`.
pub fn brute_force_phi(pair: &ShiftPair, q: &IndexSequence, t: f64, n: usize) -> Result<Frac> {
    if !(t > 0.0) {
        return invalid(format!("threshold t = {t} must be positive"));
    }
    if n == 0 || n > ORACLE_MAX_N {
        return invalid(format!("oracle horizon {n} outside [1, {ORACLE_MAX_N}]"));
    }
    let times = q.take_checked(n)?;
    let k = clearance(t);
    let len = times[n - 1] + k + 1;
    let bits = disagreement_bits(pair, len);
    // prefix[p] = number of disagreements in [0, p).
    let mut prefix = Vec::with_capacity(bits.len() + 1);
    prefix.push(0u32);
    for &b in &bits {
        prefix.push(prefix.last().unwrap() + b as u32);
    }
    let count = times
        .iter()
        .filter(|&&m| prefix[(m + k) as usize] == prefix[m as usize])
        .count();
    Ok(Frac::new(count as u64, n as u64))
}

/// Family description plus the tolerances a prediction is judged at.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyParams {
    pub alphabet_size: u32,
    pub members: usize,
    pub block_lengths: Vec<u64>,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    pub eps_one: Frac,
    pub tail_fraction: Frac,
}

impl FamilyParams {
    pub fn family(&self) -> Result<BlockFamily> {
        BlockFamily::new(self.alphabet_size, self.block_lengths.clone(), self.members)
    }
}

/// Exact `Φⁿ` at every block boundary along `Q = naturals`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPrediction {
    pub boundaries: Vec<u64>,
    pub t_grid: Vec<f64>,
    /// `phi[b][j] = Φ^{E_b}(t_grid[j])`.
    pub phi: Vec<Vec<Frac>>,
    /// `Φ^{E_b}(δ)`.
    pub phi_delta: Vec<Frac>,
    pub delta: f64,
    pub eps_one: Frac,
    /// Boundaries `E_b >= ⌈tail_fraction · E_K⌉` take part in the verdict.
    pub window_start: u64,
    /// Max over window boundaries, per threshold.
    pub upper: Vec<Frac>,
    /// Min over window boundaries at `δ`.
    pub lower_delta: Frac,
    /// Boundary-based verdict. Checkpoint extremes can only be more extreme,
    /// so `true` here implies the direct classifier agrees on the full horizon.
    pub distributional_delta: bool,
}

/// Positions `p` in `[lo, hi)` whose next disagreement is at least `k` away.
/// Agreement gaps are `[0, a_1), [b_1, a_2), ..., [b_last, ∞)`.
fn qualifying_in(blocks: &[(u64, u64)], lo: u64, hi: u64, k: u64) -> u64 {
    if hi <= lo {
        return 0;
    }
    if k == 0 {
        return hi - lo;
    }
    let clip = |a: u64, b: u64| b.min(hi).saturating_sub(a.max(lo));
    let mut total = 0;
    let mut gap_start = 0;
    for &(a, b) in blocks {
        // p + k <= a.
        total += clip(gap_start, (a + 1).saturating_sub(k));
        gap_start = b;
    }
    total + clip(gap_start, hi)
}

pub fn predict_block_profile(params: &FamilyParams) -> Result<BlockPrediction> {
    let fam = params.family()?;
    crate::distribution::check_grid(&params.t_grid)?;
    if !(params.delta > 0.0) {
        return invalid("δ must be positive");
    }
    if params.block_lengths.is_empty() {
        return invalid("family needs at least one block");
    }
    // A one-member family is padded to the pair (x, x): nothing disagrees.
    let blocks = if fam.members >= 2 { fam.disagreement_blocks() } else { Vec::new() };
    let boundaries = fam.boundaries();
    let value = |e: u64, t: f64| Frac::new(qualifying_in(&blocks, 1, e + 1, clearance(t)), e);
    let phi: Vec<Vec<Frac>> = boundaries
        .iter()
        .map(|&e| params.t_grid.iter().map(|&t| value(e, t)).collect())
        .collect();
    let phi_delta: Vec<Frac> = boundaries.iter().map(|&e| value(e, params.delta)).collect();

    let last = *boundaries.last().expect("non-empty");
    let window_start = frac::ceil_mul(&params.tail_fraction, last);
    let in_window: Vec<usize> = (0..boundaries.len()).filter(|&b| boundaries[b] >= window_start).collect();
    let upper: Vec<Frac> = (0..params.t_grid.len())
        .map(|j| in_window.iter().map(|&b| phi[b][j]).max().expect("last boundary in window"))
        .collect();
    let lower_delta = in_window.iter().map(|&b| phi_delta[b]).min().expect("last boundary in window");
    let one_minus = Frac::from_integer(1) - params.eps_one;
    Ok(BlockPrediction {
        distributional_delta: upper.iter().all(|u| *u >= one_minus) && lower_delta <= params.eps_one,
        boundaries,
        t_grid: params.t_grid.clone(),
        phi,
        phi_delta,
        delta: params.delta,
        eps_one: params.eps_one,
        window_start,
        upper,
        lower_delta,
    })
}

impl BlockPrediction {
    /// Columns `block,boundary,t,phi_predicted,phi_float`.
    pub fn write_csv(&self, mut w: impl Write, header: &[String]) -> Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "block,boundary,t,phi_predicted,phi_float")?;
        for (b, &e) in self.boundaries.iter().enumerate() {
            for (j, t) in self.t_grid.iter().enumerate() {
                let v = &self.phi[b][j];
                writeln!(w, "{},{e},{t},{},{}", b + 1, frac::display(v), frac::to_f64(v))?;
            }
        }
        Ok(())
    }
}

/// A random pair with a handful of disagreement blocks inside `[0, span)`,
/// optionally with a periodic tail.
pub fn random_block_pair(rng: &mut impl Rng, span: u64) -> ShiftPair {
    let span = span.max(8);
    let count = rng.gen_range(0..12);
    let mut cuts: Vec<u64> = (0..2 * count).map(|_| rng.gen_range(0..span)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut blocks: Vec<(u64, u64)> = cuts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let tail = if rng.gen_bool(0.3) {
        let offset = span;
        let period = rng.gen_range(2..span / 4 + 3);
        let a = offset + rng.gen_range(0..period);
        let b = rng.gen_range(a + 1..=offset + period);
        blocks.push((a, b));
        Some(PeriodicTail { offset, period })
    } else {
        None
    };
    ShiftPair::new(2, blocks, tail).expect("generated blocks are disjoint")
}
