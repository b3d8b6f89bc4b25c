//! Distribution functions of orbit distances along a time sequence and the
//! pair classifications built on them.
//!
//! For a pair `(x, y)` and times `Q = {m_1 < m_2 < ...}`,
//! `Φⁿ(t) = #{1 <= i <= n : d(f^{m_i} x, f^{m_i} y) <= t} / n`. The lower and
//! upper functions are its lim inf / lim sup, estimated here by the min / max
//! of `Φⁿ` over checkpoints in a tail window `[⌈f·h⌉, h]`.

mod membership;
mod verdict;

use std::io::Write;

use crate::error::{invalid, Result};
use crate::frac::{self, Frac};
use crate::index_seq::IndexSequence;
use crate::systems::{pow2_neg, Distance, OrbitPair};

pub use membership::membership_characterization;
pub use verdict::{Method, PairVerdict};

/// Tolerances and sampling parameters shared by every classification.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionConfig {
    /// A time is proximal when its distance is `< eps_zero`.
    pub eps_zero: f64,
    /// `Φ*` counts as 1 when `>= 1 - eps_one`, `Φ` as 0 when `<= eps_one`.
    pub eps_one: Frac,
    /// Plain Li-Yorke pairs need a time with distance `> min(li_yorke_margin, δ)`.
    pub li_yorke_margin: f64,
    pub horizon: usize,
    pub tail_fraction: Frac,
    pub t_grid: Vec<f64>,
    pub checkpoint_stride: usize,
}

impl DistributionConfig {
    /// Defaults for shift systems, where distances are exact powers of two.
    pub fn for_shift(horizon: usize) -> Self {
        Self {
            eps_zero: pow2_neg(20),
            eps_one: Frac::new(1, 50),
            li_yorke_margin: pow2_neg(20),
            horizon,
            tail_fraction: Frac::new(1, 1000),
            t_grid: default_t_grid(),
            checkpoint_stride: 1,
        }
    }

    /// Defaults for interval maps; float noise rules out exact dyadic tolerances.
    pub fn for_interval(horizon: usize) -> Self {
        Self {
            eps_zero: 1e-6,
            li_yorke_margin: 1e-6,
            ..Self::for_shift(horizon)
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.t_grid)?;
        if !(self.eps_zero > 0.0) || !(self.li_yorke_margin > 0.0) {
            return invalid("eps_zero and li_yorke_margin must be positive");
        }
        if self.eps_one > Frac::from_integer(1) {
            return invalid("eps_one must lie in [0, 1]");
        }
        if *self.tail_fraction.numer() == 0 || self.tail_fraction > Frac::from_integer(1) {
            return invalid("tail_fraction must lie in (0, 1]");
        }
        if self.horizon < 2 {
            return invalid("horizon must be at least 2");
        }
        if self.horizon > u32::MAX as usize {
            return invalid("horizon exceeds the supported 2^32 - 1 samples");
        }
        if self.checkpoint_stride == 0 {
            return invalid("checkpoint stride must be positive");
        }
        Ok(())
    }

    /// One-based first position of the tail window.
    pub fn window_start(&self) -> usize {
        tail_start(&self.tail_fraction, self.horizon)
    }

    /// `t_grid ∪ {δ}`, sorted, with the index of `δ`.
    pub(crate) fn grid_with(&self, delta: f64) -> (Vec<f64>, usize) {
        let mut grid = self.t_grid.clone();
        if !grid.contains(&delta) {
            grid.push(delta);
            grid.sort_by(f64::total_cmp);
        }
        let at = grid.iter().position(|&t| t == delta).expect("delta inserted");
        (grid, at)
    }
}

/// `2^-1, 2^-2, ..., 2^-20`, ascending.
pub fn default_t_grid() -> Vec<f64> {
    (1..=20).rev().map(pow2_neg).collect()
}

pub(crate) fn tail_start(tail_fraction: &Frac, horizon: usize) -> usize {
    frac::ceil_mul(tail_fraction, horizon as u64).min(horizon as u64) as usize
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return invalid("threshold grid is empty");
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return invalid(format!("threshold {t} must be positive and finite"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("threshold grid must be strictly increasing");
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return invalid(format!("δ = {delta} must be positive"));
    }
    Ok(())
}

fn is_checkpoint(k: usize, horizon: usize, stride: usize) -> bool {
    k % stride == 0 || k == horizon
}

/// `Φⁿ(t)` along the first `n` times of `q`.
pub fn phi_n<P: OrbitPair + ?Sized>(pair: &P, q: &IndexSequence, t: f64, n: usize) -> Result<Frac> {
    if !(t > 0.0) {
        return invalid(format!("threshold t = {t} must be positive"));
    }
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let ds = pair.distance_series(q, n)?;
    let count = ds.iter().filter(|d| d.le(t)).count();
    Ok(Frac::new(count as u64, n as u64))
}

/// Index of the smallest threshold `t` with `d <= t`; `grid.len()` if none.
fn bucket(grid: &[f64], d: Distance) -> usize {
    grid.partition_point(|&t| !d.le(t))
}

/// Single pass over `ds`, calling `on_checkpoint(k, counts)` where
/// `counts[j] = #{i <= k : d_i <= grid[j]}`.
pub(crate) fn scan_counts(
    ds: &[Distance],
    grid: &[f64],
    stride: usize,
    mut on_checkpoint: impl FnMut(usize, &[u32]),
) {
    let horizon = ds.len();
    let mut buckets = vec![0u32; grid.len() + 1];
    let mut counts = vec![0u32; grid.len()];
    for (i, &d) in ds.iter().enumerate() {
        buckets[bucket(grid, d)] += 1;
        let k = i + 1;
        if is_checkpoint(k, horizon, stride) {
            let mut acc = 0;
            for (c, b) in counts.iter_mut().zip(&buckets) {
                acc += b;
                *c = acc;
            }
            on_checkpoint(k, &counts);
        }
    }
}

/// Windowed min and max of `Φᵏ(t)` for every grid value.
pub(crate) struct TailExtremes {
    pub lower: Vec<Frac>,
    pub upper: Vec<Frac>,
}

pub(crate) fn tail_extremes(ds: &[Distance], grid: &[f64], stride: usize, window_start: usize) -> TailExtremes {
    let mut lower: Vec<Option<Frac>> = vec![None; grid.len()];
    let mut upper: Vec<Option<Frac>> = vec![None; grid.len()];
    scan_counts(ds, grid, stride, |k, counts| {
        if k < window_start {
            return;
        }
        for (j, &c) in counts.iter().enumerate() {
            let v = Frac::new(c as u64, k as u64);
            if lower[j].is_none_or(|l| v < l) {
                lower[j] = Some(v);
            }
            if upper[j].is_none_or(|u| v > u) {
                upper[j] = Some(v);
            }
        }
    });
    // The horizon itself is always a checkpoint inside the window.
    TailExtremes {
        lower: lower.into_iter().map(|v| v.expect("window has a checkpoint")).collect(),
        upper: upper.into_iter().map(|v| v.expect("window has a checkpoint")).collect(),
    }
}

/// Checkpointed `Φᵏ(t)` for a threshold grid plus tail-window estimates.
#[derive(Clone, Debug)]
pub struct DistributionProfile {
    pub q: IndexSequence,
    pub t_grid: Vec<f64>,
    pub horizon: usize,
    pub checkpoint_stride: usize,
    pub checkpoints: Vec<usize>,
    /// `counts[c * t_grid.len() + j]` = numerator of `Φ^{checkpoints[c]}(t_grid[j])`.
    counts: Vec<u32>,
    /// One-based `[start, end]`.
    pub tail_window: (usize, usize),
    pub phi_lower_est: Vec<Frac>,
    pub phi_upper_est: Vec<Frac>,
}

impl DistributionProfile {
    /// `Φᵏ(t_grid[j])` at the `c`-th checkpoint.
    pub fn phi(&self, j: usize, c: usize) -> Frac {
        let count = self.counts[c * self.t_grid.len() + j];
        Frac::new(count as u64, self.checkpoints[c] as u64)
    }

    /// `Φᵏ(t_grid[j])` when `k` is a checkpoint.
    pub fn phi_at(&self, j: usize, k: usize) -> Option<Frac> {
        let c = self.checkpoints.binary_search(&k).ok()?;
        Some(self.phi(j, c))
    }

    /// Numerator of `Φᵏ(t_grid[j])` at the `c`-th checkpoint; the denominator is the checkpoint.
    pub fn count(&self, j: usize, c: usize) -> u32 {
        self.counts[c * self.t_grid.len() + j]
    }

    /// Columns `k,t,phi_n,phi_n_float`, preceded by `# ` header lines.
    pub fn write_csv(&self, mut w: impl Write, header: &[String]) -> Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "k,t,phi_n,phi_n_float")?;
        for (c, &k) in self.checkpoints.iter().enumerate() {
            for (j, t) in self.t_grid.iter().enumerate() {
                let v = self.phi(j, c);
                writeln!(w, "{k},{t},{},{}", frac::display(&v), frac::to_f64(&v))?;
            }
        }
        Ok(())
    }
}

pub fn profile<P: OrbitPair + ?Sized>(
    pair: &P,
    q: &IndexSequence,
    t_grid: &[f64],
    horizon: usize,
    tail_fraction: Frac,
    checkpoint_stride: usize,
) -> Result<DistributionProfile> {
    check_grid(t_grid)?;
    if horizon < 2 {
        return invalid("horizon must be at least 2");
    }
    if checkpoint_stride == 0 {
        return invalid("checkpoint stride must be positive");
    }
    if *tail_fraction.numer() == 0 || tail_fraction > Frac::from_integer(1) {
        return invalid("tail_fraction must lie in (0, 1]");
    }
    let ds = pair.distance_series(q, horizon)?;
    let window_start = tail_start(&tail_fraction, horizon);
    let mut checkpoints = Vec::with_capacity(horizon / checkpoint_stride + 1);
    let mut counts = Vec::with_capacity((horizon / checkpoint_stride + 1) * t_grid.len());
    scan_counts(&ds, t_grid, checkpoint_stride, |k, cs| {
        debug_assert!(cs.windows(2).all(|w| w[0] <= w[1]), "Φ not monotone in t");
        checkpoints.push(k);
        counts.extend_from_slice(cs);
    });
    let ext = tail_extremes(&ds, t_grid, checkpoint_stride, window_start);
    Ok(DistributionProfile {
        q: q.clone(),
        t_grid: t_grid.to_vec(),
        horizon,
        checkpoint_stride,
        checkpoints,
        counts,
        tail_window: (window_start, horizon),
        phi_lower_est: ext.lower,
        phi_upper_est: ext.upper,
    })
}

/// First and last time in the horizon satisfying `pred`.
pub(crate) fn witness_times(times: &[u64], ds: &[Distance], pred: impl Fn(Distance) -> bool) -> Vec<u64> {
    let first = ds.iter().position(|&d| pred(d));
    let last = ds.iter().rposition(|&d| pred(d));
    match (first, last) {
        (Some(a), Some(b)) if a != b => vec![times[a], times[b]],
        (Some(a), _) => vec![times[a]],
        _ => Vec::new(),
    }
}

/// Finite-horizon classification straight from the distribution functions.
pub fn classify<P: OrbitPair + ?Sized>(
    pair: &P,
    q: &IndexSequence,
    delta: f64,
    config: &DistributionConfig,
) -> Result<PairVerdict> {
    config.validate()?;
    check_delta(delta)?;
    let times = q.take_checked(config.horizon)?;
    let ds = pair.distance_series(q, config.horizon)?;
    let (grid, delta_at) = config.grid_with(delta);
    let window_start = config.window_start();
    let ext = tail_extremes(&ds, &grid, config.checkpoint_stride, window_start);

    let one_minus = Frac::from_integer(1) - config.eps_one;
    let separation = config.li_yorke_margin.min(delta);
    let proximal_times = witness_times(&times, &ds, |d| d.lt(config.eps_zero));
    let distal_times = witness_times(&times, &ds, |d| d.gt(delta));
    let separated_times = witness_times(&times, &ds, |d| d.gt(separation));

    let upper: Vec<(f64, Frac)> = grid
        .iter()
        .zip(&ext.upper)
        .filter(|(t, _)| config.t_grid.contains(t))
        .map(|(&t, &u)| (t, u))
        .collect();
    let lower: Vec<(f64, Frac)> = grid.iter().copied().zip(ext.lower.iter().copied()).collect();
    let upper_ok = upper.iter().all(|(_, u)| *u >= one_minus);

    Ok(PairVerdict {
        method: Method::Direct,
        li_yorke: !proximal_times.is_empty() && !separated_times.is_empty(),
        li_yorke_delta: !proximal_times.is_empty() && !distal_times.is_empty(),
        distributional: upper_ok && lower.iter().any(|(_, l)| *l <= config.eps_one),
        distributional_delta: upper_ok && ext.lower[delta_at] <= config.eps_one,
        delta,
        config: config.clone(),
        tail_window: (window_start, config.horizon),
        proximal_times,
        distal_times,
        separated_times,
        upper,
        lower,
    })
}
