use std::fmt;

/// Orbit distance `d(f^n x, f^n y)`.
///
/// Shift distances are powers of two and are kept as exponents so that
/// comparisons stay exact even far below `f64` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distance {
    Zero,
    /// `2^-e`.
    Dyadic(u64),
    /// Floating-point estimate from an interval map.
    Real(f64),
}

/// `2^-e` as an `f64`; exact down to the smallest subnormal, `0.0` below it.
pub fn pow2_neg(e: u64) -> f64 {
    if e <= 1022 {
        f64::from_bits((1023 - e) << 52)
    } else if e <= 1074 {
        f64::from_bits(1u64 << (1074 - e))
    } else {
        0.0
    }
}

impl Distance {
    pub fn to_f64(self) -> f64 {
        match self {
            Distance::Zero => 0.0,
            Distance::Dyadic(e) => pow2_neg(e),
            Distance::Real(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Distance::Zero) || self == Distance::Real(0.0)
    }

    /// `d <= t`.
    pub fn le(self, t: f64) -> bool {
        match self {
            Distance::Zero => t >= 0.0,
            // Below the subnormal range 2^-e is smaller than every positive f64.
            Distance::Dyadic(e) if e > 1074 => t > 0.0,
            d => d.to_f64() <= t,
        }
    }

    /// `d < t`.
    pub fn lt(self, t: f64) -> bool {
        match self {
            Distance::Zero => t > 0.0,
            Distance::Dyadic(e) if e > 1074 => t > 0.0,
            d => d.to_f64() < t,
        }
    }

    /// `d > t`.
    pub fn gt(self, t: f64) -> bool {
        !self.le(t)
    }

    /// `d < 2^-k`, exact for every `k`.
    pub fn below_pow2(self, k: u64) -> bool {
        match self {
            Distance::Zero => true,
            Distance::Dyadic(e) => e > k,
            Distance::Real(x) => x == 0.0 || x < pow2_neg(k),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Zero => f.write_str("0"),
            Distance::Dyadic(e) => write!(f, "2^-{e}"),
            Distance::Real(x) => write!(f, "{x:e}"),
        }
    }
}
