//! Continuous compensators and their generalized inverse.
//!
//! A compensator is a continuous nondecreasing function `A` on `[0, ∞)`
//! with `A(0) = 0`. Its generalized inverse
//! `A⁻¹(s) = inf{t >= 0 : A(t) >= s}` takes the left edge of every flat
//! piece and is `∞` for levels the function never reaches.

use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{interpolate, CadlagPath};
use crate::time::TimePoint;

/// Absolute tolerance for comparing real-valued sides of an identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// The closed forms and tables a compensator can take.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompensatorForm {
    /// `A(t) = rate · t`.
    Linear { rate: f64 },
    /// `A(t) = t^exponent`.
    Power { exponent: f64 },
    /// `A(t) = level · (1 - e^{-rate · t})`, bounded by `level`.
    Saturating { level: f64, rate: f64 },
    /// Piecewise linear through the knots of `path`, continued past the last
    /// knot with slope `tail_slope`.
    Tabulated { path: CadlagPath, tail_slope: f64 },
}

/// A compensator, optionally stopped at a finite time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compensator {
    form: CompensatorForm,
    stopped_at: Option<f64>,
}

impl Compensator {
    pub fn linear(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self::from_form(CompensatorForm::Linear { rate }))
    }

    pub fn power(exponent: f64) -> Result<Self> {
        positive("exponent", exponent)?;
        Ok(Self::from_form(CompensatorForm::Power { exponent }))
    }

    pub fn saturating(level: f64, rate: f64) -> Result<Self> {
        positive("level", level)?;
        positive("rate", rate)?;
        Ok(Self::from_form(CompensatorForm::Saturating { level, rate }))
    }

    /// A piecewise-linear compensator through `knots`.
    ///
    /// The first knot must be `(0, 0)`, times strictly increasing and values
    /// nondecreasing. Errors name the offending knot index.
    pub fn tabulated(knots: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self> {
        match knots.first() {
            None => return Err(Error::Table { row: 0, reason: "empty table".into() }),
            Some(&(t, v)) if t != 0.0 || v != 0.0 => {
                return Err(Error::Table {
                    row: 0,
                    reason: format!("first knot must be (0, 0), got ({t}, {v})"),
                })
            }
            _ => {}
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::Table { row: i, reason: "non-finite entry".into() });
            }
            if i > 0 {
                let (pt, pv) = knots[i - 1];
                if t <= pt {
                    return Err(Error::Table {
                        row: i,
                        reason: format!("time {t} does not exceed previous time {pt}"),
                    });
                }
                if v < pv {
                    return Err(Error::Table {
                        row: i,
                        reason: format!("value {v} decreases from {pv}"),
                    });
                }
            }
        }
        if !(tail_slope.is_finite() && tail_slope >= 0.0) {
            return Err(Error::InvalidCompensator(format!(
                "tail slope must be finite and nonnegative, got {tail_slope}"
            )));
        }
        if knots[knots.len() - 1].1 == 0.0 && tail_slope == 0.0 {
            return Err(Error::InvalidCompensator(
                "compensator is identically zero".into(),
            ));
        }
        let path = CadlagPath::linear(knots)?;
        Ok(Self::from_form(CompensatorForm::Tabulated { path, tail_slope }))
    }

    /// Loads a table from CSV with a header row and columns `time,value`.
    ///
    /// Row indices in errors count data rows from 0.
    pub fn from_csv<R: Read>(reader: R, tail_slope: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut knots = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Table { row, reason: e.to_string() })?;
            if record.len() != 2 {
                return Err(Error::Table {
                    row,
                    reason: format!("expected 2 columns, got {}", record.len()),
                });
            }
            let parse = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| Error::Table {
                    row,
                    reason: format!("column {i}: {e}"),
                })
            };
            knots.push((parse(0)?, parse(1)?));
        }
        Self::tabulated(knots, tail_slope)
    }

    fn from_form(form: CompensatorForm) -> Self {
        Self { form, stopped_at: None }
    }

    pub fn form(&self) -> &CompensatorForm {
        &self.form
    }

    pub fn stopped_at(&self) -> Option<f64> {
        self.stopped_at
    }

    /// Every compensator lives on all of `[0, ∞)`.
    pub fn domain_sup(&self) -> TimePoint {
        TimePoint::Infinite
    }

    /// `sup_t A(t)`, `None` when unbounded.
    pub fn range_sup(&self) -> Option<f64> {
        if let Some(tau) = self.stopped_at {
            return Some(self.unstopped_value(tau));
        }
        match &self.form {
            CompensatorForm::Linear { .. } | CompensatorForm::Power { .. } => None,
            CompensatorForm::Saturating { level, .. } => Some(*level),
            CompensatorForm::Tabulated { path, tail_slope } => {
                (*tail_slope == 0.0).then(|| path.terminal_value())
            }
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        if self.stopped_at.is_some() {
            return false;
        }
        match &self.form {
            CompensatorForm::Tabulated { path, tail_slope } => {
                *tail_slope > 0.0 && path.knots().windows(2).all(|w| w[1].1 > w[0].1)
            }
            _ => true,
        }
    }

    /// `A(t)`. Infinite `t` reads `range_sup` and fails when that is infinite.
    pub fn evaluate(&self, t: TimePoint) -> Result<f64> {
        match t {
            TimePoint::Finite(t) => Ok(self.value(t)),
            TimePoint::Infinite => self.range_sup().ok_or_else(|| {
                Error::Domain("A(inf) is undefined for an unbounded compensator".into())
            }),
        }
    }

    /// `A(t)` for finite `t >= 0`.
    pub fn value(&self, t: f64) -> f64 {
        match self.stopped_at {
            Some(tau) => self.unstopped_value(t.min(tau)),
            None => self.unstopped_value(t),
        }
    }

    fn unstopped_value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.form {
            CompensatorForm::Linear { rate } => rate * t,
            CompensatorForm::Power { exponent } if *exponent == 2.0 => t * t,
            CompensatorForm::Power { exponent } => t.powf(*exponent),
            CompensatorForm::Saturating { level, rate } => -level * (-rate * t).exp_m1(),
            CompensatorForm::Tabulated { path, tail_slope } => {
                let last = path.last_time();
                if t <= last {
                    path.evaluate(t)
                } else {
                    path.terminal_value() + tail_slope * (t - last)
                }
            }
        }
    }

    /// `inf{t >= 0 : A(t) >= s}`, `∞` when the level is never reached.
    pub fn generalized_inverse(&self, s: f64) -> Result<TimePoint> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("inverse level must be >= 0, got {s}")));
        }
        if s == 0.0 {
            return Ok(TimePoint::ZERO);
        }
        if s == f64::INFINITY {
            return Ok(TimePoint::Infinite);
        }
        if let Some(tau) = self.stopped_at {
            if s > self.unstopped_value(tau) {
                return Ok(TimePoint::Infinite);
            }
        }
        Ok(match &self.form {
            CompensatorForm::Linear { rate } => TimePoint::Finite(s / rate),
            CompensatorForm::Power { exponent } if *exponent == 2.0 => TimePoint::Finite(s.sqrt()),
            CompensatorForm::Power { exponent } => TimePoint::Finite(s.powf(exponent.recip())),
            CompensatorForm::Saturating { level, rate } => {
                if s >= *level {
                    TimePoint::Infinite
                } else {
                    TimePoint::Finite(-(-s / level).ln_1p() / rate)
                }
            }
            CompensatorForm::Tabulated { path, tail_slope } => {
                tabulated_inverse(path.knots(), *tail_slope, s)
            }
        })
    }

    /// The stopped compensator `t ↦ A(t ∧ τ)`.
    pub fn stop(&self, tau: TimePoint) -> Result<Compensator> {
        let tau = match tau {
            TimePoint::Infinite => return Ok(self.clone()),
            TimePoint::Finite(t) if t > 0.0 => t,
            TimePoint::Finite(t) => {
                return Err(Error::Domain(format!("stopping time must be > 0, got {t}")))
            }
        };
        let stopped_at = Some(self.stopped_at.map_or(tau, |old| old.min(tau)));
        Ok(Compensator {
            form: self.form.clone(),
            stopped_at,
        })
    }

    /// Piecewise-linear interpolation of `A` on `grid`, which must start at 0.
    pub fn tabulate(&self, grid: &[f64], tail_slope: f64) -> Result<Compensator> {
        let knots = grid.iter().map(|&t| (t, self.value(t))).collect();
        Compensator::tabulated(knots, tail_slope)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {x}")))
    }
}

fn tabulated_inverse(knots: &[(f64, f64)], tail_slope: f64, s: f64) -> TimePoint {
    // first knot whose value reaches s; ties resolve to the earliest knot
    let j = knots.partition_point(|&(_, v)| v < s);
    if j == 0 {
        return TimePoint::ZERO;
    }
    if j == knots.len() {
        let (t_last, v_last) = knots[j - 1];
        return if tail_slope > 0.0 {
            TimePoint::Finite(t_last + (s - v_last) / tail_slope)
        } else {
            TimePoint::Infinite
        };
    }
    let (t0, v0) = knots[j - 1];
    let (t1, v1) = knots[j];
    // v0 < s <= v1, so the segment has positive slope
    TimePoint::Finite(interpolate(v0, t0, v1, t1, s))
}

/// Both sides of the time-change identities
/// `1{A⁻¹(s) >= τ} = 1{s >= A(τ)}` and `s ∧ A(τ) = A(A⁻¹(s) ∧ τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeChangeSides {
    pub inverse_indicator: bool,
    pub level_indicator: bool,
    pub level_min: f64,
    pub compensated_min: f64,
}

impl TimeChangeSides {
    pub fn holds(&self) -> bool {
        self.inverse_indicator == self.level_indicator
            && (self.level_min - self.compensated_min).abs() <= IDENTITY_TOLERANCE
    }
}

pub fn time_change_sides(a: &Compensator, tau: TimePoint, s: f64) -> Result<TimeChangeSides> {
    let tau_f = tau.expect_finite("tau")?;
    if tau_f <= 0.0 {
        return Err(Error::Domain("tau must be > 0".into()));
    }
    let inverse = a.generalized_inverse(s)?;
    let a_tau = a.value(tau_f);
    Ok(TimeChangeSides {
        inverse_indicator: inverse >= tau,
        level_indicator: s >= a_tau,
        level_min: s.min(a_tau),
        compensated_min: a.value(inverse.min(tau).finite().unwrap_or(tau_f)),
    })
}

/// Whether both time-change identities hold at `(τ, s)`: indicators
/// exactly, values within [`IDENTITY_TOLERANCE`].
///
/// They hold almost surely for `τ` drawn from a model with compensator `A`,
/// but fail for the measure-zero times strictly inside a flat piece.
pub fn time_change_check(a: &Compensator, tau: TimePoint, s: f64) -> Result<bool> {
    Ok(time_change_sides(a, tau, s)?.holds())
}
