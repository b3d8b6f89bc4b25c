use super::IndexSequence;
use crate::error::{invalid, Result};
use crate::frac::Frac;

/// Finite-horizon record of `#(P ∩ {m_1..m_k}) / k`.
///
/// `running_sup` is the maximum over all checkpoints up to `horizon`; it is the
/// stand-in for the limsup in the upper density.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub horizon: usize,
    pub value_at_horizon: Frac,
    pub running_sup: Frac,
    pub checkpoints: Vec<(usize, Frac)>,
}

impl DensityEstimate {
    /// Largest checkpoint value at or after position `from`.
    pub fn sup_from(&self, from: usize) -> Option<Frac> {
        self.checkpoints
            .iter()
            .filter(|(k, _)| *k >= from)
            .map(|(_, v)| *v)
            .max()
    }
}

/// Outcome of a finite-horizon membership test for the family of subsequences
/// with upper density at least `threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMembership {
    pub member: bool,
    pub threshold: Frac,
    /// Best checkpoint value inside the window.
    pub sup: Frac,
    /// Finite evidence that P is infinite: P meets Q somewhere in `window`.
    /// This is a proxy, not a proof.
    pub infinite_evidence: bool,
    /// One-based positions `[start, end]` of Q that were inspected.
    pub window: (usize, usize),
}

pub fn upper_density(
    p: &IndexSequence,
    q: &IndexSequence,
    horizon: usize,
    checkpoint_stride: usize,
) -> Result<DensityEstimate> {
    let hits = membership_hits(p, q, horizon, checkpoint_stride)?;
    Ok(estimate_from_hits(&hits, checkpoint_stride))
}

/// Membership in the class with `sup ≥ a` over all checkpoints; the
/// infinite-P proxy looks at the second half of the horizon.
pub fn in_density_class(
    p: &IndexSequence,
    q: &IndexSequence,
    a: Frac,
    horizon: usize,
    checkpoint_stride: usize,
) -> Result<ClassMembership> {
    check_level(a)?;
    let hits = membership_hits(p, q, horizon, checkpoint_stride)?;
    let est = estimate_from_hits(&hits, checkpoint_stride);
    let late = horizon.div_ceil(2).max(1);
    let infinite_evidence = hits[late - 1..].iter().any(|&h| h);
    Ok(ClassMembership {
        member: est.running_sup >= a && infinite_evidence,
        threshold: a,
        sup: est.running_sup,
        infinite_evidence,
        window: (1, horizon),
    })
}

/// Same test restricted to checkpoints in `[window_start, horizon]`.
///
/// Inside a tail window the checkpoint condition alone decides any level
/// `a > 0`; `infinite_evidence` is still reported.
pub fn in_density_class_within(
    p: &IndexSequence,
    q: &IndexSequence,
    a: Frac,
    window_start: usize,
    horizon: usize,
    checkpoint_stride: usize,
) -> Result<ClassMembership> {
    check_level(a)?;
    let hits = membership_hits(p, q, horizon, checkpoint_stride)?;
    class_from_hits(&hits, a, window_start, checkpoint_stride)
}

pub(crate) fn check_level(a: Frac) -> Result<()> {
    if a > Frac::from_integer(1) {
        return invalid(format!("density level {a} outside [0, 1]"));
    }
    Ok(())
}

fn check_horizon(horizon: usize, checkpoint_stride: usize) -> Result<()> {
    if horizon == 0 {
        return invalid("horizon must be positive");
    }
    if checkpoint_stride == 0 {
        return invalid("checkpoint stride must be positive");
    }
    Ok(())
}

/// `hits[k]` is true when the (k+1)-th term of Q lies in P.
fn membership_hits(
    p: &IndexSequence,
    q: &IndexSequence,
    horizon: usize,
    checkpoint_stride: usize,
) -> Result<Vec<bool>> {
    check_horizon(horizon, checkpoint_stride)?;
    let qs = q.take_checked(horizon)?;
    let mut hits = Vec::with_capacity(horizon);
    let mut pi = p.first_index_at_least(qs[0]);
    let mut prev_p = 0u64;
    for &m in &qs {
        let mut hit = false;
        while let Some(k) = pi {
            let Some(t) = p.term(k) else {
                pi = None;
                break;
            };
            if t <= prev_p && k > 0 {
                return invalid(format!("P is not strictly increasing at index {k}"));
            }
            if t < m {
                prev_p = t;
                pi = Some(k + 1);
                continue;
            }
            hit = t == m;
            break;
        }
        hits.push(hit);
    }
    Ok(hits)
}

pub(crate) fn estimate_from_hits(hits: &[bool], checkpoint_stride: usize) -> DensityEstimate {
    let horizon = hits.len();
    let mut count = 0u64;
    let mut checkpoints = Vec::with_capacity(horizon / checkpoint_stride + 1);
    for (i, &h) in hits.iter().enumerate() {
        count += h as u64;
        let k = i + 1;
        if k % checkpoint_stride == 0 || k == horizon {
            checkpoints.push((k, Frac::new(count, k as u64)));
        }
    }
    let value_at_horizon = checkpoints.last().map(|c| c.1).unwrap_or_default();
    let running_sup = checkpoints.iter().map(|c| c.1).max().unwrap_or_default();
    DensityEstimate {
        horizon,
        value_at_horizon,
        running_sup,
        checkpoints,
    }
}

pub(crate) fn class_from_hits(
    hits: &[bool],
    a: Frac,
    window_start: usize,
    checkpoint_stride: usize,
) -> Result<ClassMembership> {
    let horizon = hits.len();
    check_horizon(horizon, checkpoint_stride)?;
    if window_start == 0 || window_start > horizon {
        return invalid(format!("window start {window_start} outside [1, {horizon}]"));
    }
    let est = estimate_from_hits(hits, checkpoint_stride);
    let sup = est.sup_from(window_start).unwrap_or(est.value_at_horizon);
    let infinite_evidence = hits[window_start - 1..].iter().any(|&h| h);
    // A positive level already forces P to be infinite; the late-hit proxy
    // only decides the a = 0 class.
    let zero = Frac::from_integer(0);
    Ok(ClassMembership {
        member: sup >= a && (a > zero || infinite_evidence),
        threshold: a,
        sup,
        infinite_evidence,
        window: (window_start, horizon),
    })
}
