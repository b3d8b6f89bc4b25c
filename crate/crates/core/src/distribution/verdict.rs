use std::fmt;

use super::DistributionConfig;
use crate::error::Result;
use crate::frac::{self, Frac};
use crate::systems::OrbitPair;

/// Which code path produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Tail-window extremes of the distribution functions.
    Direct,
    /// Density-class tests on proximal and distal hitting sets.
    Membership,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Membership => "membership",
        })
    }
}

/// Finite-horizon classification of one pair.
///
/// All four flags are judgments at the configured horizon and tolerances,
/// not proofs about the limit. The parameters are carried along so that a
/// verdict can be reproduced exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PairVerdict {
    pub method: Method,
    pub li_yorke: bool,
    pub li_yorke_delta: bool,
    pub distributional: bool,
    pub distributional_delta: bool,
    pub delta: f64,
    pub config: DistributionConfig,
    pub tail_window: (usize, usize),
    /// First and last times with distance `< eps_zero`.
    pub proximal_times: Vec<u64>,
    /// First and last times with distance `> δ`.
    pub distal_times: Vec<u64>,
    /// First and last times with distance `> min(li_yorke_margin, δ)`.
    pub separated_times: Vec<u64>,
    /// Upper-function evidence per threshold: the windowed max of `Φᵏ(t)` or,
    /// on the membership path, the windowed upper density of `{d < ε}`.
    pub upper: Vec<(f64, Frac)>,
    /// Lower-function evidence per threshold `s`: the windowed min of `Φᵏ(s)`,
    /// or one minus the windowed upper density of `{d > s}`.
    pub lower: Vec<(f64, Frac)>,
}

impl PairVerdict {
    /// `[li_yorke, li_yorke_delta, distributional, distributional_delta]`.
    pub fn flags(&self) -> [bool; 4] {
        [
            self.li_yorke,
            self.li_yorke_delta,
            self.distributional,
            self.distributional_delta,
        ]
    }

    /// Re-evaluates every witness time against the pair's distance function.
    pub fn recheck<P: OrbitPair + ?Sized>(&self, pair: &P) -> Result<bool> {
        let separation = self.config.li_yorke_margin.min(self.delta);
        for &t in &self.proximal_times {
            if !pair.distance_at(t)?.lt(self.config.eps_zero) {
                return Ok(false);
            }
        }
        for &t in &self.distal_times {
            if !pair.distance_at(t)?.gt(self.delta) {
                return Ok(false);
            }
        }
        for &t in &self.separated_times {
            if !pair.distance_at(t)?.gt(separation) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smallest upper-function value over the thresholds (the binding check).
    pub fn min_upper(&self) -> Option<Frac> {
        self.upper.iter().map(|(_, v)| *v).min()
    }

    /// Lower-function value at `δ`.
    pub fn lower_at_delta(&self) -> Option<Frac> {
        self.lower.iter().find(|(s, _)| *s == self.delta).map(|(_, v)| *v)
    }

    pub const CSV_HEADER: &'static str = "pair,method,li_yorke,li_yorke_delta,distributional,distributional_delta,delta,eps_zero,eps_one,horizon,window_start,window_end,min_upper,lower_at_delta,proximal_times,distal_times";

    pub fn csv_row(&self, label: &str) -> String {
        let opt = |v: Option<Frac>| v.map(|v| frac::display(&v)).unwrap_or_default();
        let times = |ts: &[u64]| ts.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        format!(
            "{label},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.li_yorke,
            self.li_yorke_delta,
            self.distributional,
            self.distributional_delta,
            self.delta,
            self.config.eps_zero,
            frac::display(&self.config.eps_one),
            self.config.horizon,
            self.tail_window.0,
            self.tail_window.1,
            opt(self.min_upper()),
            opt(self.lower_at_delta()),
            times(&self.proximal_times),
            times(&self.distal_times),
        )
    }
}
