//! Exact fractions used for densities, distribution values and tolerances.

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::error::{invalid, Result};

pub type Frac = Ratio<u64>;

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.02"` into an exact fraction.
pub fn parse_frac(s: &str) -> Result<Frac> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad(s))?;
        let d: u64 = d.trim().parse().map_err(|_| bad(s))?;
        if d == 0 {
            return invalid(format!("zero denominator in {s:?}"));
        }
        return Ok(Frac::new(n, d));
    }
    match s.split_once('.') {
        None => Ok(Frac::from_integer(s.parse().map_err(|_| bad(s))?)),
        Some((int, dec)) => {
            if dec.len() > 18 || dec.is_empty() && int.is_empty() {
                return Err(bad(s));
            }
            let scale = 10u64.pow(dec.len() as u32);
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad(s))? };
            let dec: u64 = if dec.is_empty() { 0 } else { dec.parse().map_err(|_| bad(s))? };
            let num = int
                .checked_mul(scale)
                .and_then(|v| v.checked_add(dec))
                .ok_or_else(|| bad(s))?;
            Ok(Frac::new(num, scale))
        }
    }
}

fn bad(s: &str) -> crate::Error {
    crate::Error::InvalidArgument(format!("not a non-negative fraction: {s:?}"))
}

pub fn to_f64(f: &Frac) -> f64 {
    f.to_f64().unwrap_or(f64::NAN)
}

/// `p/q` rendering used in every CSV output.
pub fn display(f: &Frac) -> String {
    format!("{}/{}", f.numer(), f.denom())
}

/// Smallest integer `k >= 1` with `k >= fraction * n`.
pub fn ceil_mul(fraction: &Frac, n: u64) -> u64 {
    let num = *fraction.numer() as u128 * n as u128;
    let den = *fraction.denom() as u128;
    (num.div_ceil(den) as u64).max(1)
}
