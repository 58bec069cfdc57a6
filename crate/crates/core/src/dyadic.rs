//! Exact arithmetic on the dyadic half-line.
//!
//! A [`DyadicRational`] is a finite binary expansion `numerator / 2^scale`.
//! Dyadic addition `⊕` adds binary digits without carry, i.e. XOR of the
//! aligned numerators. It is its own inverse, so `x ⊖ y == x ⊕ y`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Numerators must stay below this bound.
pub const NUMERATOR_LIMIT: u64 = 1 << 63;
/// Largest supported binary exponent.
pub const MAX_SCALE: u32 = 62;
/// Largest grid [`dyadic_grid`] will materialise.
pub const MAX_GRID_POINTS: u64 = 1 << 32;

/// A non-negative dyadic rational in canonical form: the numerator is odd,
/// or the scale is zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DyadicRational {
    numerator: u64,
    scale: u32,
}

impl DyadicRational {
    pub const ZERO: DyadicRational = DyadicRational {
        numerator: 0,
        scale: 0,
    };

    /// Builds `numerator / 2^scale` and canonicalises it.
    pub fn new(numerator: u64, scale: u32) -> Result<Self> {
        if numerator >= NUMERATOR_LIMIT {
            return Err(Error::Overflow);
        }
        if scale > MAX_SCALE {
            return Err(Error::InvalidDyadic(format!(
                "scale {scale} exceeds {MAX_SCALE}"
            )));
        }
        Ok(Self::canonical(numerator, scale))
    }

    pub fn from_integer(value: u64) -> Result<Self> {
        Self::new(value, 0)
    }

    fn canonical(numerator: u64, scale: u32) -> Self {
        if numerator == 0 {
            return Self::ZERO;
        }
        let shift = numerator.trailing_zeros().min(scale);
        DyadicRational {
            numerator: numerator >> shift,
            scale: scale - shift,
        }
    }

    /// Exact conversion from a float; fails unless the value is a
    /// non-negative dyadic rational representable within the bounds.
    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidDyadic(format!(
                "{value} is not on the half-line"
            )));
        }
        let mut scaled = value;
        for scale in 0..=MAX_SCALE {
            if scaled.fract() == 0.0 {
                if scaled >= NUMERATOR_LIMIT as f64 {
                    return Err(Error::Overflow);
                }
                return Self::new(scaled as u64, scale);
            }
            scaled *= 2.0;
        }
        Err(Error::InvalidDyadic(format!(
            "{value} needs more than {MAX_SCALE} binary digits"
        )))
    }

    pub fn numerator(self) -> u64 {
        self.numerator
    }

    pub fn scale(self) -> u32 {
        self.scale
    }

    pub fn is_canonical(self) -> bool {
        self.scale == 0 || self.numerator & 1 == 1
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / (1u64 << self.scale) as f64
    }

    /// Numerator expressed at a finer scale.
    fn aligned(self, scale: u32) -> Result<u64> {
        debug_assert!(scale >= self.scale);
        let shift = scale - self.scale;
        if self.numerator == 0 {
            return Ok(0);
        }
        if shift >= 64 || self.numerator.leading_zeros() <= shift {
            return Err(Error::Overflow);
        }
        let value = self.numerator << shift;
        if value >= NUMERATOR_LIMIT {
            return Err(Error::Overflow);
        }
        Ok(value)
    }

    /// Dyadic addition `self ⊕ other`.
    pub fn dyadic_add(self, other: Self) -> Result<Self> {
        let scale = self.scale.max(other.scale);
        let sum = self.aligned(scale)? ^ other.aligned(scale)?;
        Ok(Self::canonical(sum, scale))
    }

    /// `|self ⊖ other|`, which equals the value of `self ⊕ other`.
    pub fn dyadic_distance(self, other: Self) -> Result<f64> {
        Ok(self.dyadic_add(other)?.to_f64())
    }

    /// Exact decimal expansion; a dyadic rational with scale `s` has exactly
    /// `s` digits after the point.
    pub fn to_decimal_string(self) -> String {
        let int_part = self.numerator >> self.scale;
        if self.scale == 0 {
            return int_part.to_string();
        }
        let mask = (1u128 << self.scale) - 1;
        let mut rem = u128::from(self.numerator) & mask;
        let mut out = format!("{int_part}.");
        for _ in 0..self.scale {
            rem *= 10;
            let digit = rem >> self.scale;
            out.push(char::from(b'0' + digit as u8));
            rem &= mask;
        }
        out
    }
}

/// `x ⊕ y`.
pub fn dyadic_add(x: DyadicRational, y: DyadicRational) -> Result<DyadicRational> {
    x.dyadic_add(y)
}

/// Dyadic distance `‖x ⊖ y‖`.
pub fn dyadic_distance(x: DyadicRational, y: DyadicRational) -> Result<f64> {
    x.dyadic_distance(y)
}

/// The lattice `{k·2^-r : 0 ≤ k < M·2^r}` in increasing order.
pub fn dyadic_grid(resolution: u32, support: u64) -> Result<Vec<DyadicRational>> {
    if support == 0 {
        return Err(Error::InvalidDyadic(
            "support bound must be at least 1".into(),
        ));
    }
    if resolution > MAX_SCALE {
        return Err(Error::InvalidDyadic(format!(
            "resolution {resolution} exceeds {MAX_SCALE}"
        )));
    }
    let count = support
        .checked_mul(1u64 << resolution)
        .filter(|&c| c <= MAX_GRID_POINTS)
        .ok_or_else(|| {
            Error::ResourceLimit(format!("grid 2^{resolution} x {support} is too large"))
        })?;
    (0..count)
        .map(|k| DyadicRational::new(k, resolution))
        .collect()
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        let a = u128::from(self.numerator) << (scale - self.scale);
        let b = u128::from(other.numerator) << (scale - other.scale);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{} ({})", self.numerator, self.scale, self)
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> DyadicRational {
        DyadicRational::from_f64(x).unwrap()
    }

    #[test]
    fn three_plus_six() {
        assert_eq!(dyadic_add(d(3.0), d(6.0)).unwrap(), d(5.0));
    }

    #[test]
    fn disjoint_digits_behave_like_addition() {
        assert_eq!(dyadic_add(d(1.5), d(0.25)).unwrap(), d(1.75));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(dyadic_distance(d(3.0), d(6.0)).unwrap(), 5.0);
        assert_eq!(dyadic_distance(d(0.5), d(0.75)).unwrap(), 0.25);
        assert_eq!(dyadic_distance(d(0.375), d(0.375)).unwrap(), 0.0);
    }

    #[test]
    fn canonical_form() {
        let x = DyadicRational::new(12, 3).unwrap();
        assert_eq!((x.numerator(), x.scale()), (3, 1));
        assert!(x.is_canonical());
        assert_eq!(DyadicRational::new(0, 9).unwrap(), DyadicRational::ZERO);
        assert_eq!(DyadicRational::new(8, 2).unwrap(), d(2.0));
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(DyadicRational::new(1 << 63, 0), Err(Error::Overflow));
        let big = DyadicRational::new((1 << 62) + 1, 0).unwrap();
        let tiny = DyadicRational::new(1, 2).unwrap();
        assert_eq!(dyadic_add(big, tiny), Err(Error::Overflow));
    }

    #[test]
    fn from_f64_rejects_non_dyadic() {
        assert!(DyadicRational::from_f64(1e-30).is_err());
        assert_eq!(DyadicRational::from_f64(0.1).unwrap().scale(), 55);
        assert!(DyadicRational::from_f64(-1.0).is_err());
        assert!(DyadicRational::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn grids() {
        let as_f = |g: Vec<DyadicRational>| g.into_iter().map(|x| x.to_f64()).collect::<Vec<_>>();
        assert_eq!(as_f(dyadic_grid(1, 1).unwrap()), vec![0.0, 0.5]);
        assert_eq!(as_f(dyadic_grid(0, 3).unwrap()), vec![0.0, 1.0, 2.0]);
        assert_eq!(as_f(dyadic_grid(2, 1).unwrap()), vec![0.0, 0.25, 0.5, 0.75]);
        assert!(dyadic_grid(3, 0).is_err());
        let g = dyadic_grid(4, 3).unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn decimal_strings_are_exact() {
        assert_eq!(d(0.0).to_decimal_string(), "0");
        assert_eq!(d(3.0).to_decimal_string(), "3");
        assert_eq!(d(1.75).to_decimal_string(), "1.75");
        assert_eq!(
            DyadicRational::new(1, 10).unwrap().to_decimal_string(),
            "0.0009765625"
        );
        let x = DyadicRational::new((1 << 62) - 1, 62).unwrap();
        let s = x.to_decimal_string();
        assert_eq!(s.len(), 2 + 62);
        assert!(s.starts_with("0.99999999999999999"));
    }
}
