//! Extended reals `ℝ ∪ {+∞}`.
//!
//! Infinite costs, divergences and conjugate values are carried by the
//! [`Ext::Infinite`] variant and never by a large or infinite float. The
//! arithmetic follows the usual conventions of convex analysis:
//!
//! | operation      | result |
//! |----------------|--------|
//! | `∞ + x`        | `∞`    |
//! | `∞ − ∞`        | `∞`    |
//! | `∞ · 0`        | `0`    |
//! | `∞ · c`, c > 0 | `∞`    |

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ext {
    Finite(f64),
    Infinite,
}

impl Ext {
    pub const ZERO: Ext = Ext::Finite(0.0);

    /// Wraps a float; `+inf` becomes [`Ext::Infinite`].
    ///
    /// # Panics
    /// On NaN or `-inf`, which never arise from a well-posed computation here.
    pub fn from_f64(x: f64) -> Ext {
        assert!(!x.is_nan(), "NaN cannot be stored as an extended real");
        if x == f64::INFINITY {
            Ext::Infinite
        } else {
            assert!(x.is_finite(), "-inf cannot be stored as an extended real");
            Ext::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Ext::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Finite(x) => Some(x),
            Ext::Infinite => None,
        }
    }

    /// Lossy view for reporting and plotting: `∞` maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Ext::Finite(x) => x,
            Ext::Infinite => f64::INFINITY,
        }
    }

    /// `c · self` for a nonnegative scalar, with `∞ · 0 = 0`.
    pub fn scale(self, c: f64) -> Ext {
        assert!(c >= 0.0, "extended scaling needs c >= 0, got {c}");
        match self {
            Ext::Finite(x) => Ext::Finite(c * x),
            Ext::Infinite if c == 0.0 => Ext::ZERO,
            Ext::Infinite => Ext::Infinite,
        }
    }

    /// `self − other` with `∞ − ∞ = ∞`. Subtracting `∞` from a finite value
    /// has no meaning in this crate and panics.
    pub fn minus(self, other: Ext) -> Ext {
        match (self, other) {
            (Ext::Infinite, _) => Ext::Infinite,
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a - b),
            (Ext::Finite(_), Ext::Infinite) => panic!("finite minus infinite is -inf"),
        }
    }

    /// `max(self, 0)`.
    pub fn positive_part(self) -> Ext {
        match self {
            Ext::Finite(x) => Ext::Finite(x.max(0.0)),
            Ext::Infinite => Ext::Infinite,
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Add for Ext {
    type Output = Ext;

    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
            _ => Ext::Infinite,
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Ext) -> Option<Ordering> {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => a.partial_cmp(b),
            (Ext::Finite(_), Ext::Infinite) => Some(Ordering::Less),
            (Ext::Infinite, Ext::Finite(_)) => Some(Ordering::Greater),
            (Ext::Infinite, Ext::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl From<f64> for Ext {
    fn from(x: f64) -> Ext {
        Ext::from_f64(x)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(x) => write!(f, "{x}"),
            Ext::Infinite => write!(f, "inf"),
        }
    }
}

// JSON has no infinity literal; infinite values travel as the string "inf".
impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ext::Finite(x) => s.serialize_f64(*x),
            Ext::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Ext, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Ext::Finite(x)),
            Raw::Str(s) if s == "inf" => Ok(Ext::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_times_zero_is_zero() {
        assert_eq!(Ext::Infinite.scale(0.0), Ext::ZERO);
        assert_eq!(Ext::Infinite.scale(2.0), Ext::Infinite);
    }

    #[test]
    fn infinity_minus_infinity_is_infinity() {
        assert_eq!(Ext::Infinite.minus(Ext::Infinite), Ext::Infinite);
        assert_eq!((Ext::Finite(1.0) + Ext::Infinite), Ext::Infinite);
    }

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(Ext::Finite(1e300) < Ext::Infinite);
        assert_eq!(Ext::Finite(3.0).max(Ext::Finite(2.0)), Ext::Finite(3.0));
    }

    #[test]
    fn json_round_trip() {
        let v = vec![Ext::Finite(1.5), Ext::Infinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"inf"]"#);
        let back: Vec<Ext> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
