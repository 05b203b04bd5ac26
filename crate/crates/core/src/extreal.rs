//! Nonnegative extended reals `[0, ∞]`.
//!
//! All kernels, integrals and bounds in this crate take values in `[0, ∞]`.
//! `ExtReal` keeps infinity as a distinct state instead of relying on IEEE
//! infinity, so that the measure-theoretic convention `0 · ∞ = 0` holds and
//! NaN can never be produced by the arithmetic below.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);
    pub const ONE: ExtReal = ExtReal::Finite(1.0);

    /// Checked constructor. `+inf` maps to `Infinity`; negatives and NaN are rejected.
    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "extended real must be a nonnegative number, got {x}"
            )));
        }
        Ok(Self::from_f64(x))
    }

    /// Lossy constructor used on computed quantities: `+inf` (and overflow)
    /// becomes `Infinity`, NaN and tiny negative rounding residue become 0.
    pub fn saturating(x: f64) -> Self {
        if x.is_nan() || x <= 0.0 {
            ExtReal::ZERO
        } else if x.is_infinite() {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(x)
        }
    }

    fn from_f64(x: f64) -> Self {
        if x.is_infinite() {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self == ExtReal::ZERO
    }

    /// Finite value, or `None` for infinity.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinity => None,
        }
    }

    /// IEEE view (`Infinity` becomes `f64::INFINITY`).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    /// `x^e` for `e > 0`; infinity stays infinity.
    pub fn powf(self, e: f64) -> Self {
        debug_assert!(e > 0.0);
        match self {
            ExtReal::Finite(x) => ExtReal::saturating(x.powf(e)),
            ExtReal::Infinity => ExtReal::Infinity,
        }
    }

    /// `x^(1/p)` for `p >= 1`.
    pub fn root(self, p: f64) -> Self {
        if p == 1.0 {
            self
        } else {
            self.powf(1.0 / p)
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl Default for ExtReal {
    fn default() -> Self {
        ExtReal::ZERO
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::saturating(x)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => Ordering::Equal,
            (ExtReal::Infinity, _) => Ordering::Greater,
            (_, ExtReal::Infinity) => Ordering::Less,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.total_cmp(b),
        })
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::saturating(a + b),
            _ => ExtReal::Infinity,
        }
    }
}

impl AddAssign for ExtReal {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return ExtReal::ZERO;
        }
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::saturating(a * b),
            _ => ExtReal::Infinity,
        }
    }
}

impl Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> Self {
        iter.fold(ExtReal::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinity => f.write_str("inf"),
        }
    }
}

// JSON has no infinity literal, so infinity travels as the string "inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => ExtReal::new(x).map_err(serde::de::Error::custom),
            Repr::Str(s) if s == "inf" || s == "Infinity" => Ok(ExtReal::Infinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("not an extended real: {s}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::ZERO * ExtReal::Infinity, ExtReal::ZERO);
        assert_eq!(ExtReal::Infinity * ExtReal::ZERO, ExtReal::ZERO);
        assert_eq!(ExtReal::Infinity * ExtReal::Finite(2.0), ExtReal::Infinity);
    }

    #[test]
    fn infinity_absorbs_addition_and_roots() {
        assert_eq!(ExtReal::Infinity + ExtReal::Finite(3.0), ExtReal::Infinity);
        assert_eq!(ExtReal::Infinity.root(2.0), ExtReal::Infinity);
        assert_eq!(ExtReal::Finite(9.0).root(2.0), ExtReal::Finite(3.0));
    }

    #[test]
    fn rejects_negative_and_nan() {
        assert!(ExtReal::new(-1.0).is_err());
        assert!(ExtReal::new(f64::NAN).is_err());
        assert_eq!(ExtReal::new(f64::INFINITY).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn overflow_saturates() {
        let big = ExtReal::Finite(f64::MAX);
        assert_eq!(big + big, ExtReal::Infinity);
        assert_eq!(big * ExtReal::Finite(2.0), ExtReal::Infinity);
    }

    #[test]
    fn json_round_trip_of_infinity() {
        let s = serde_json::to_string(&ExtReal::Infinity).unwrap();
        assert_eq!(s, "\"inf\"");
        let back: ExtReal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ExtReal::Infinity);
        assert!(serde_json::from_str::<ExtReal>("-2.0").is_err());
    }

    fn ext() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            9 => (0.0f64..1e6).prop_map(ExtReal::Finite),
            1 => Just(ExtReal::Infinity),
        ]
    }

    proptest! {
        #[test]
        fn arithmetic_never_yields_nan(a in ext(), b in ext()) {
            for x in [a + b, a * b, a.root(3.0)] {
                prop_assert!(!x.to_f64().is_nan());
                prop_assert!(x >= ExtReal::ZERO);
            }
        }

        #[test]
        fn addition_is_monotone(a in ext(), b in ext(), c in ext()) {
            if a <= b {
                prop_assert!(a + c <= b + c);
            }
        }
    }
}
