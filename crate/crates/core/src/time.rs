//! Model time on `[0, ∞]`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of model time: a finite nonnegative real or `+∞`.
///
/// Infinity is a distinct variant rather than `f64::INFINITY` so that an
/// infimum over an empty set stays visible to callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimePoint {
    Finite(f64),
    Infinite,
}

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint::Finite(0.0);

    /// Builds a finite time, rejecting negative, NaN and infinite values.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            // normalise -0.0
            Ok(TimePoint::Finite(value + 0.0))
        } else {
            Err(Error::Domain(format!("{value} is not a finite nonnegative time")))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, TimePoint::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            TimePoint::Finite(t) => Some(t),
            TimePoint::Infinite => None,
        }
    }

    /// The finite value, or an error naming `what` when the time is infinite.
    pub fn expect_finite(self, what: &str) -> Result<f64> {
        self.finite()
            .ok_or_else(|| Error::Domain(format!("{what} must be finite")))
    }

    pub fn min(self, other: TimePoint) -> TimePoint {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl Eq for TimePoint {}

impl PartialOrd for TimePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (TimePoint::Finite(a), TimePoint::Finite(b)) => a.total_cmp(b),
            (TimePoint::Finite(_), TimePoint::Infinite) => Ordering::Less,
            (TimePoint::Infinite, TimePoint::Finite(_)) => Ordering::Greater,
            (TimePoint::Infinite, TimePoint::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::Finite(t) => write!(f, "{t}"),
            TimePoint::Infinite => f.write_str("inf"),
        }
    }
}

/// Finite times serialize as JSON numbers, infinity as the string `"inf"`.
impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimePoint::Finite(t) => serializer.serialize_f64(*t),
            TimePoint::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(t) => TimePoint::new(t).map_err(serde::de::Error::custom),
            Repr::Str(s) if s == "inf" => Ok(TimePoint::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad time `{s}`"))),
        }
    }
}
