//! Right-continuous piecewise paths with left limits.

use serde::Serialize;

use crate::error::{Error, Result};

/// Shape of a path between two consecutive knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    /// Holds the left knot's value; jumps to the right knot's value at the right knot.
    Constant,
    /// Interpolates linearly between the two knot values.
    Linear,
}

/// An immutable càdlàg path on `[0, ∞)`.
///
/// Knot `i` carries `(time_i, value_i)`; segment `i` describes the path on
/// `[time_i, time_{i+1})`. From the last knot on the path equals
/// `terminal_value`, which must agree with the last knot's value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CadlagPath {
    knots: Vec<(f64, f64)>,
    segments: Vec<SegmentKind>,
    terminal_value: f64,
}

impl CadlagPath {
    pub fn new(knots: Vec<(f64, f64)>, segments: Vec<SegmentKind>) -> Result<Self> {
        let Some(&(t0, _)) = knots.first() else {
            return Err(Error::InvalidPath("a path needs at least one knot".into()));
        };
        if t0 != 0.0 {
            return Err(Error::InvalidPath(format!("first knot must be at time 0, got {t0}")));
        }
        if segments.len() + 1 != knots.len() {
            return Err(Error::InvalidPath(format!(
                "{} knots need {} segments, got {}",
                knots.len(),
                knots.len() - 1,
                segments.len()
            )));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidPath(format!("knot {i} is not finite")));
            }
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidPath(format!(
                    "knot times must be strictly increasing (knot {})",
                    i + 1
                )));
            }
        }
        let terminal_value = knots[knots.len() - 1].1;
        Ok(Self {
            knots,
            segments,
            terminal_value,
        })
    }

    /// A path made only of linear segments.
    pub fn linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let n = knots.len().saturating_sub(1);
        Self::new(knots, vec![SegmentKind::Linear; n])
    }

    /// A pure step path.
    pub fn step(knots: Vec<(f64, f64)>) -> Result<Self> {
        let n = knots.len().saturating_sub(1);
        Self::new(knots, vec![SegmentKind::Constant; n])
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![(0.0, value)], Vec::new())
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn segments(&self) -> &[SegmentKind] {
        &self.segments
    }

    pub fn terminal_value(&self) -> f64 {
        self.terminal_value
    }

    pub fn last_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Value at `t`, i.e. the right limit. Times before 0 read the initial value.
    pub fn evaluate(&self, t: f64) -> f64 {
        // index of the last knot with time <= t
        let k = self.knots.partition_point(|&(kt, _)| kt <= t);
        if k == 0 {
            return self.knots[0].1;
        }
        let k = k - 1;
        if k + 1 == self.knots.len() {
            return self.terminal_value;
        }
        self.segment_value(k, t)
    }

    /// Left limit at `t > 0`.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("left limit needs 0 < t < inf, got {t}")));
        }
        // index of the last knot with time < t
        let k = self.knots.partition_point(|&(kt, _)| kt < t) - 1;
        if k + 1 == self.knots.len() {
            return Ok(self.terminal_value);
        }
        let (t1, v1) = self.knots[k + 1];
        Ok(match self.segments[k] {
            SegmentKind::Constant => self.knots[k].1,
            SegmentKind::Linear if t == t1 => v1,
            SegmentKind::Linear => self.segment_value(k, t),
        })
    }

    /// Size of the jump at `t`, `value(t) - value(t-)`.
    pub fn jump_at(&self, t: f64) -> Result<f64> {
        Ok(self.evaluate(t) - self.left_limit(t)?)
    }

    fn segment_value(&self, k: usize, t: f64) -> f64 {
        let (t0, v0) = self.knots[k];
        match self.segments[k] {
            SegmentKind::Constant => v0,
            SegmentKind::Linear => {
                let (t1, v1) = self.knots[k + 1];
                interpolate(t0, v0, t1, v1, t)
            }
        }
    }
}

/// Linear interpolation that is exact at both endpoints and monotone in `t`.
///
/// `v0 + w (v1 - v0)` is monotone in `w` but can overshoot `v1` by an ulp, so
/// the result is clamped to the segment's value range.
pub(crate) fn interpolate(t0: f64, v0: f64, t1: f64, v1: f64, t: f64) -> f64 {
    if t <= t0 {
        return v0;
    }
    if t >= t1 {
        return v1;
    }
    let w = (t - t0) / (t1 - t0);
    let v = v0 + w * (v1 - v0);
    v.clamp(v0.min(v1), v0.max(v1))
}
