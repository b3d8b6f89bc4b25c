//! Classification through hitting sets and upper density.
//!
//! A pair is distributionally scrambled along Q exactly when
//! (1) for every ε > 0 the times with `d < ε` have upper density 1 in Q, and
//! (2) for some δ > 0 the times with `d > δ` have upper density 1 in Q.
//! This path never touches `Φ` directly; it only asks the density-class test
//! about explicit hitting sets.

use super::{check_delta, check_grid, witness_times, DistributionConfig, Method, PairVerdict};
use crate::error::Result;
use crate::frac::Frac;
use crate::index_seq::IndexSequence;
use crate::index_seq::density::class_from_hits;
use crate::systems::{Distance, OrbitPair};

fn hits(ds: &[Distance], pred: impl Fn(Distance) -> bool) -> Vec<bool> {
    ds.iter().map(|&d| pred(d)).collect()
}

/// Verdict from density-class tests. `eps_grid` drives clause (1); clause (2)
/// is tested at every `s ∈ t_grid ∪ {δ}`.
///
/// Shift distances are powers of two, so `{d < 2t} = {d <= t}` for dyadic
/// `t`; passing `eps_grid = 2·t_grid` lines this path up with [`super::classify`].
pub fn membership_characterization<P: OrbitPair + ?Sized>(
    pair: &P,
    q: &IndexSequence,
    delta: f64,
    eps_grid: &[f64],
    config: &DistributionConfig,
) -> Result<PairVerdict> {
    config.validate()?;
    check_delta(delta)?;
    check_grid(eps_grid)?;
    let times = q.take_checked(config.horizon)?;
    let ds = pair.distance_series(q, config.horizon)?;
    let stride = config.checkpoint_stride;
    let window_start = config.window_start();
    let full = Frac::from_integer(1);
    let level = full - config.eps_one;
    let zero = Frac::from_integer(0);

    let mut upper = Vec::with_capacity(eps_grid.len());
    let mut clause_one = true;
    for &eps in eps_grid {
        let m = class_from_hits(&hits(&ds, |d| d.lt(eps)), level, window_start, stride)?;
        clause_one &= m.member;
        upper.push((eps, m.sup));
    }

    let (grid, delta_at) = config.grid_with(delta);
    let mut lower = Vec::with_capacity(grid.len());
    let mut distal_members = Vec::with_capacity(grid.len());
    for &s in &grid {
        let m = class_from_hits(&hits(&ds, |d| d.gt(s)), level, window_start, stride)?;
        distal_members.push(m.member);
        lower.push((s, full - m.sup));
    }

    // Li-Yorke clauses ask only for non-empty hitting sets within the horizon.
    let nonempty = |pred: &dyn Fn(Distance) -> bool| -> Result<bool> {
        Ok(class_from_hits(&hits(&ds, pred), zero, 1, stride)?.member)
    };
    let separation = config.li_yorke_margin.min(delta);
    let proximal = nonempty(&|d| d.lt(config.eps_zero))?;
    let distal = nonempty(&|d| d.gt(delta))?;
    let separated = nonempty(&|d| d.gt(separation))?;

    Ok(PairVerdict {
        method: Method::Membership,
        li_yorke: proximal && separated,
        li_yorke_delta: proximal && distal,
        distributional: clause_one && distal_members.iter().any(|&m| m),
        distributional_delta: clause_one && distal_members[delta_at],
        delta,
        config: config.clone(),
        tail_window: (window_start, config.horizon),
        proximal_times: witness_times(&times, &ds, |d| d.lt(config.eps_zero)),
        distal_times: witness_times(&times, &ds, |d| d.gt(delta)),
        separated_times: witness_times(&times, &ds, |d| d.gt(separation)),
        upper,
        lower,
    })
}
