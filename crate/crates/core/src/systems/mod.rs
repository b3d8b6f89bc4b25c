//! Dynamical systems whose pairwise orbit distances feed the statistics.

mod distance;
mod interval;
mod shift;

pub use distance::{pow2_neg, Distance};
pub use interval::{IntervalMap, IntervalPair};
pub use shift::{parse_blocks, BlockFamily, PeriodicTail, ShiftPair, Word};

use crate::error::Result;
use crate::index_seq::IndexSequence;

/// A pair of points together with a way to evaluate `d(f^n x, f^n y)`.
pub trait OrbitPair: Send + Sync {
    fn distance_at(&self, n: u64) -> Result<Distance>;

    /// Distances at the first `count` times of `times`.
    fn distance_series(&self, times: &IndexSequence, count: usize) -> Result<Vec<Distance>> {
        times
            .take_checked(count)?
            .into_iter()
            .map(|t| self.distance_at(t))
            .collect()
    }

    /// Feeds `(n, d_n)` for `n = from..=to` to `f` until it returns `false`.
    fn scan(&self, from: u64, to: u64, f: &mut dyn FnMut(u64, Distance) -> bool) -> Result<()> {
        for n in from..=to {
            if !f(n, self.distance_at(n)?) {
                break;
            }
        }
        Ok(())
    }

    fn describe(&self) -> String;
}

impl<T: OrbitPair + ?Sized> OrbitPair for &T {
    fn distance_at(&self, n: u64) -> Result<Distance> {
        (**self).distance_at(n)
    }

    fn distance_series(&self, times: &IndexSequence, count: usize) -> Result<Vec<Distance>> {
        (**self).distance_series(times, count)
    }

    fn scan(&self, from: u64, to: u64, f: &mut dyn FnMut(u64, Distance) -> bool) -> Result<()> {
        (**self).scan(from, to, f)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}
