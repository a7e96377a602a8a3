//! Exact count ratios.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// `numerator / denominator` kept exactly as counted, not reduced.
/// A zero denominator reads as zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fraction {
    numerator: u64,
    denominator: u64,
}

impl Fraction {
    pub const fn new(numerator: u64, denominator: u64) -> Self {
        Self {
            numerator,
            denominator,
        }
    }

    pub fn from_counts(numerator: usize, denominator: usize) -> Self {
        Self::new(numerator as u64, denominator as u64)
    }

    pub const fn numerator(&self) -> u64 {
        self.numerator
    }

    pub const fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn ratio(&self) -> Ratio<u64> {
        if self.denominator == 0 {
            Ratio::zero()
        } else {
            Ratio::new(self.numerator, self.denominator)
        }
    }

    pub fn to_float<F: Float + FromPrimitive>(&self) -> F {
        if self.denominator == 0 {
            return F::zero();
        }
        let n = F::from_u64(self.numerator).unwrap_or_else(F::nan);
        let d = F::from_u64(self.denominator).unwrap_or_else(F::nan);
        n / d
    }

    /// Percentage rounded half-up to `decimals` places, e.g. `"9.1%"`.
    /// Computed in integer arithmetic so no float rounding leaks in.
    pub fn percent(&self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals);
        let scaled = if self.denominator == 0 {
            0
        } else {
            let q = u128::from(self.numerator) * 100 * scale;
            let d = u128::from(self.denominator);
            (2 * q + d) / (2 * d)
        };
        if decimals == 0 {
            format!("{scaled}%")
        } else {
            let width = decimals as usize;
            format!("{}.{:0width$}%", scaled / scale, scaled % scale)
        }
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.ratio() == other.ratio()
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio().cmp(&other.ratio())
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid fraction {0:?}, expected <numerator>/<denominator>")]
pub struct ParseFractionError(String);

impl FromStr for Fraction {
    type Err = ParseFractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseFractionError(s.to_owned());
        let (n, d) = s.split_once('/').ok_or_else(err)?;
        Ok(Self::new(
            n.trim().parse().map_err(|_| err())?,
            d.trim().parse().map_err(|_| err())?,
        ))
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
