//! Announcing sequences and the continuous decreasing process that first
//! hits zero at the announced time.
//!
//! For a strictly increasing sequence `0 = τ₀ < τ₁ < … < τ_m < τ` the
//! process `Y` is linear on every `[τ_{i-1}, τ_i)`, from `1/i` down to
//! `1/(i+1)`. The infinite construction accumulates segments at `τ`; here a
//! final segment closes the gap from `(τ_m, 1/(m+1))` to `(τ, 0)`, and `Y`
//! is `0` from `τ` on.
//!
//! `Y_t` is adapted only to the filtration enlarged by the increments
//! `τ_i - τ_{i-1}`; that enlargement has no representation here.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{CadlagPath, SegmentKind};
use crate::time::TimePoint;

/// A finite nondecreasing sequence of times announcing `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnouncingSequence {
    times: Vec<f64>,
    target: TimePoint,
    closeness: f64,
}

impl AnnouncingSequence {
    /// Validates that `times` is nondecreasing, stays strictly below a
    /// positive `target`, and ends within `closeness` of it.
    pub fn new(times: Vec<f64>, target: TimePoint, closeness: f64) -> Result<Self> {
        let target_f = match target {
            TimePoint::Finite(t) => t,
            TimePoint::Infinite => {
                return Err(Error::Announcing("an infinite target cannot be announced".into()))
            }
        };
        if !(closeness >= 0.0) {
            return Err(Error::Announcing(format!("closeness must be >= 0, got {closeness}")));
        }
        if let Some(i) = times.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Announcing(format!("time {i} is not a finite nonnegative number")));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Announcing(format!("times decrease at index {}", i + 1)));
        }
        if target_f > 0.0 {
            if let Some(i) = times.iter().position(|&t| t >= target_f) {
                return Err(Error::Announcing(format!(
                    "time {i} = {} does not precede the target {target_f}",
                    times[i]
                )));
            }
        } else if times.iter().any(|&t| t != 0.0) {
            return Err(Error::Announcing("a zero target is announced only by zeros".into()));
        }
        let last = times.last().copied().unwrap_or(0.0);
        if target_f - last > closeness {
            return Err(Error::Announcing(format!(
                "last time {last} is farther than {closeness} from the target {target_f}"
            )));
        }
        Ok(Self {
            times,
            target,
            closeness,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn target(&self) -> TimePoint {
        self.target
    }

    pub fn closeness(&self) -> f64 {
        self.closeness
    }

    fn target_value(&self) -> f64 {
        self.target.finite().expect("validated finite")
    }

    /// Whether `0 < τ₁ < τ₂ < …`, counting the implicit `τ₀ = 0`.
    pub fn is_strict(&self) -> bool {
        let mut prev = 0.0;
        self.times.iter().all(|&t| {
            let ok = t > prev;
            prev = t;
            ok
        })
    }
}

/// Keeps the terms that strictly exceed the previously kept one, starting
/// from `τ₀ = 0`.
///
/// The result announces the same target; it fails when a positive target is
/// left with no terms at all.
pub fn extract_strict_subsequence(seq: &AnnouncingSequence) -> Result<AnnouncingSequence> {
    let mut kept = Vec::with_capacity(seq.times.len());
    let mut prev = 0.0;
    for &t in &seq.times {
        if t > prev {
            kept.push(t);
            prev = t;
        }
    }
    if kept.is_empty() && seq.target_value() > 0.0 {
        return Err(Error::Announcing(
            "no strictly increasing terms; more terms are needed to announce the target".into(),
        ));
    }
    AnnouncingSequence::new(kept, seq.target, seq.closeness)
}

/// Concrete announcing schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `τ_n = target (1 - 2^{-n})`
    Geometric,
    /// `τ_n = target · n / (n + 1)`
    Harmonic,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Scheme::Geometric),
            "harmonic" => Ok(Scheme::Harmonic),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme `{other}` (valid: geometric, harmonic)"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Geometric => "geometric",
            Scheme::Harmonic => "harmonic",
        })
    }
}

/// The first `m` terms of `scheme` for `target`.
pub fn make_announcing_sequence(target: TimePoint, m: usize, scheme: Scheme) -> Result<AnnouncingSequence> {
    let target_f = match target {
        TimePoint::Finite(t) if t > 0.0 => t,
        TimePoint::Finite(t) => {
            return Err(Error::Announcing(format!("target must be > 0, got {t}")))
        }
        TimePoint::Infinite => {
            return Err(Error::Announcing("an infinite target cannot be announced".into()))
        }
    };
    if m == 0 {
        return Err(Error::Announcing("need at least one term".into()));
    }
    let (times, closeness): (Vec<f64>, f64) = match scheme {
        Scheme::Geometric => (
            (1..=m).map(|n| target_f * (1.0 - 0.5f64.powi(n as i32))).collect(),
            target_f * 0.5f64.powi(m as i32),
        ),
        Scheme::Harmonic => (
            (1..=m).map(|n| target_f * n as f64 / (n as f64 + 1.0)).collect(),
            target_f / (m as f64 + 1.0),
        ),
    };
    // the float gap can exceed the exact bound by an ulp
    let gap = target_f - times[times.len() - 1];
    let seq = AnnouncingSequence::new(times, target, closeness.max(gap))?;
    if !seq.is_strict() {
        return Err(Error::Announcing(format!(
            "{m} {scheme} terms are not distinct at double precision for target {target_f}"
        )));
    }
    Ok(seq)
}

/// The continuous decreasing process built from an announcing sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YProcess {
    path: CadlagPath,
    /// `Y(τ_{i-1}) = 1/i` for `i = 1..=m+1`.
    knot_levels: Vec<f64>,
    knot_times: Vec<f64>,
    target: TimePoint,
}

impl YProcess {
    pub fn path(&self) -> &CadlagPath {
        &self.path
    }

    pub fn target(&self) -> TimePoint {
        self.target
    }

    pub fn knot_levels(&self) -> &[f64] {
        &self.knot_levels
    }

    /// `τ₀ = 0, τ₁, …, τ_m`.
    pub fn knot_times(&self) -> &[f64] {
        &self.knot_times
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.path.evaluate(t)
    }

    /// `max_i |Y(τ_{i-1}) - 1/i|`.
    pub fn max_knot_error(&self) -> f64 {
        self.knot_times
            .iter()
            .zip(1..)
            .map(|(&t, i)| (self.path.evaluate(t) - 1.0 / i as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `max |Y(t-) - Y(t)|` over the positive knot times.
    pub fn max_continuity_gap(&self) -> f64 {
        self.path
            .knots()
            .iter()
            .filter(|(t, _)| *t > 0.0)
            .map(|&(t, v)| (self.path.left_limit(t).expect("t > 0") - v).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds `Y` from a strictly increasing announcing sequence.
///
/// A zero target gives `Y ≡ 0`.
pub fn build_y_process(seq: &AnnouncingSequence) -> Result<YProcess> {
    let target = seq.target_value();
    if target == 0.0 {
        return Ok(YProcess {
            path: CadlagPath::constant(0.0)?,
            knot_levels: Vec::new(),
            knot_times: Vec::new(),
            target: TimePoint::ZERO,
        });
    }
    if !seq.is_strict() {
        return Err(Error::Announcing(
            "times must be strictly increasing from 0; extract the strict subsequence first".into(),
        ));
    }
    let knot_times: Vec<f64> = std::iter::once(0.0).chain(seq.times.iter().copied()).collect();
    let knot_levels: Vec<f64> = (1..=knot_times.len()).map(|i| 1.0 / i as f64).collect();
    let mut knots: Vec<(f64, f64)> = knot_times.iter().copied().zip(knot_levels.iter().copied()).collect();
    knots.push((target, 0.0));
    let path = CadlagPath::linear(knots)?;
    Ok(YProcess {
        path,
        knot_levels,
        knot_times,
        target: seq.target,
    })
}

/// `inf{t >= 0 : Y_t = 0}`, read off the knots.
pub fn y_hitting_time(y: &YProcess) -> TimePoint {
    first_zero(&y.path)
}

/// First time a path reaches a value `<= 0`, `∞` if it never does.
pub fn first_zero(path: &CadlagPath) -> TimePoint {
    let knots = path.knots();
    if knots[0].1 <= 0.0 {
        return TimePoint::ZERO;
    }
    for k in 1..knots.len() {
        let (t0, v0) = knots[k - 1];
        let (t1, v1) = knots[k];
        if v1 > 0.0 {
            continue;
        }
        return match path.segments()[k - 1] {
            SegmentKind::Linear if v1 < 0.0 => {
                TimePoint::Finite((t0 + (t1 - t0) * v0 / (v0 - v1)).min(t1))
            }
            _ => TimePoint::Finite(t1),
        };
    }
    if path.terminal_value() <= 0.0 {
        TimePoint::Finite(path.last_time())
    } else {
        TimePoint::Infinite
    }
}
