//! Continuous self-maps of `[0, 1]` in `f64` arithmetic.
//!
//! Distances produced here are floating-point estimates. The exact oracle
//! tests never rely on them.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use super::distance::Distance;
use super::OrbitPair;
use crate::error::{invalid, Error, Result};
use crate::index_seq::IndexSequence;

/// Per-step slack allowed before an iterate counts as leaving `[0, 1]`.
const DOMAIN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum IntervalMap {
    /// `x ↦ slope · min(x, 1 - x)`, `0 < slope <= 2`.
    Tent { slope: f64 },
    /// `x ↦ r x (1 - x)`, `0 < r <= 4`.
    Logistic { r: f64 },
    /// Linear interpolation through `(x, y)` breakpoints from `x = 0` to `x = 1`.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

impl IntervalMap {
    pub fn tent(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope <= 2.0) {
            return invalid(format!("tent slope {slope} must lie in (0, 2] to map [0,1] into itself"));
        }
        Ok(IntervalMap::Tent { slope })
    }

    pub fn logistic(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 4.0) {
            return invalid(format!("logistic parameter {r} must lie in (0, 4]"));
        }
        Ok(IntervalMap::Logistic { r })
    }

    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return invalid("piecewise-linear map needs at least two breakpoints");
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return invalid("breakpoints must start at x = 0 and end at x = 1");
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return invalid("breakpoint x values must be strictly increasing");
        }
        // Extrema of a piecewise-linear map sit on breakpoints.
        if let Some(&(x, y)) = points.iter().find(|(_, y)| !(0.0..=1.0).contains(y)) {
            return invalid(format!("breakpoint ({x}, {y}) leaves [0, 1]"));
        }
        Ok(IntervalMap::PiecewiseLinear { points })
    }

    pub fn apply(&self, x: f64) -> f64 {
        let y = match self {
            IntervalMap::Tent { slope } => slope * x.min(1.0 - x),
            IntervalMap::Logistic { r } => r * x * (1.0 - x),
            IntervalMap::PiecewiseLinear { points } => {
                let k = points.partition_point(|p| p.0 < x).clamp(1, points.len() - 1);
                let ((x0, y0), (x1, y1)) = (points[k - 1], points[k]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        };
        debug_assert!(
            (-DOMAIN_TOLERANCE..=1.0 + DOMAIN_TOLERANCE).contains(&y),
            "iterate {y} left [0, 1]"
        );
        y.clamp(0.0, 1.0)
    }
}

impl FromStr for IntervalMap {
    type Err = Error;

    /// `tent:2.0`, `logistic:4.0`, `pwl:0,0;0.5,1;1,0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("map spec {s:?} needs kind:parameters")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: {v:?}")))
        };
        match kind.trim() {
            "tent" => Self::tent(num(arg)?),
            "logistic" => Self::logistic(num(arg)?),
            "pwl" => {
                let points = arg
                    .split(';')
                    .map(|p| {
                        let (x, y) = p
                            .split_once(',')
                            .ok_or_else(|| Error::InvalidArgument(format!("breakpoint {p:?} needs x,y")))?;
                        Ok((num(x)?, num(y)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::piecewise_linear(points)
            }
            other => invalid(format!("unknown map kind {other:?}")),
        }
    }
}

impl fmt::Display for IntervalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalMap::Tent { slope } => write!(f, "tent:{slope}"),
            IntervalMap::Logistic { r } => write!(f, "logistic:{r}"),
            IntervalMap::PiecewiseLinear { points } => {
                let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x},{y}")).collect();
                write!(f, "pwl:{}", pts.join(";"))
            }
        }
    }
}

/// Two starting points under one interval map, with a cached distance history.
#[derive(Debug)]
pub struct IntervalPair {
    map: IntervalMap,
    x: f64,
    y: f64,
    max_iterations: u64,
    cache: Mutex<OrbitCache>,
}

impl Clone for IntervalPair {
    fn clone(&self) -> Self {
        let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        Self {
            map: self.map.clone(),
            x: self.x,
            y: self.y,
            max_iterations: self.max_iterations,
            cache: Mutex::new(cache.clone()),
        }
    }
}

#[derive(Clone, Debug)]
struct OrbitCache {
    x: f64,
    y: f64,
    distances: Vec<f64>,
}

impl IntervalPair {
    pub fn new(map: IntervalMap, x: f64, y: f64, max_iterations: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return invalid(format!("points ({x}, {y}) must lie in [0, 1]"));
        }
        Ok(Self {
            map,
            x,
            y,
            max_iterations,
            cache: Mutex::new(OrbitCache {
                x,
                y,
                distances: vec![(x - y).abs()],
            }),
        })
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn points(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    fn check_budget(&self, n: u64) -> Result<()> {
        if n > self.max_iterations {
            return Err(Error::BudgetExceeded {
                requested: n,
                budget: self.max_iterations,
            });
        }
        Ok(())
    }
}

impl OrbitPair for IntervalPair {
    fn distance_at(&self, n: u64) -> Result<Distance> {
        self.check_budget(n)?;
        let mut c = self.cache.lock().expect("orbit cache poisoned");
        while (c.distances.len() as u64) <= n {
            c.x = self.map.apply(c.x);
            c.y = self.map.apply(c.y);
            let d = (c.x - c.y).abs();
            c.distances.push(d);
        }
        Ok(Distance::Real(c.distances[n as usize]))
    }

    /// One forward pass to the largest requested time; no per-sample re-iteration.
    fn distance_series(&self, times: &IndexSequence, count: usize) -> Result<Vec<Distance>> {
        let ts = times.take_checked(count)?;
        if let Some(&last) = ts.last() {
            self.check_budget(last)?;
        }
        let (mut x, mut y) = (self.x, self.y);
        let mut n = 0u64;
        let mut out = Vec::with_capacity(count);
        for t in ts {
            while n < t {
                x = self.map.apply(x);
                y = self.map.apply(y);
                n += 1;
            }
            out.push(Distance::Real((x - y).abs()));
        }
        Ok(out)
    }

    /// Iterates forward from the starting points without touching the cache.
    fn scan(&self, from: u64, to: u64, f: &mut dyn FnMut(u64, Distance) -> bool) -> Result<()> {
        if from <= to {
            self.check_budget(to)?;
        }
        let (mut x, mut y) = (self.x, self.y);
        for n in 0..=to {
            if n >= from && !f(n, Distance::Real((x - y).abs())) {
                break;
            }
            x = self.map.apply(x);
            y = self.map.apply(y);
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("interval[{} x={} y={}]", self.map, self.x, self.y)
    }
}
