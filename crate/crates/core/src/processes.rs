//! Jump-time models and the indicator process `X_t = 1{t >= τ}`.
//!
//! Every catalog model draws `τ = A⁻¹(Z)` from one exponential variate `Z`,
//! which makes `A` the compensator of `1{t >= τ}` in the filtration that
//! reveals `Z` progressively. For a deterministic `A` this gives the closed
//! form `P(τ <= t) = 1 - e^{-A(t)}`.
//!
//! The semigroup of the indicator process uses the additive convention
//! `P_t f(x) = E[f(X_t + x)] = f(x) P(t < τ) + f(x + 1) P(τ <= t)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::compensator::Compensator;
use crate::error::{Error, Result};
use crate::path::CadlagPath;
use crate::rng::RngStream;
use crate::time::TimePoint;

/// Names accepted by [`build_model`] and shown by `list-models`.
pub const CATALOG: [&str; 4] = ["poisson", "inhomogeneous", "ctmc", "flat"];

/// Deliberately mislabelled model used as a negative control.
pub const NEGATIVE_CONTROL: &str = "negative-control";

/// Distribution function of `τ`.
#[derive(Debug, Clone, PartialEq)]
pub enum TauCdf {
    /// `τ ~ Exp(rate)`.
    Exponential { rate: f64 },
    /// `P(τ <= t) = 1 - e^{-A(t)}`.
    Compensated(Compensator),
    /// Empirical CDF of the given samples, kept sorted.
    Empirical(Arc<[f64]>),
}

impl TauCdf {
    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("empirical law needs samples"));
        }
        if samples.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidParameter(
                "empirical jump times must be > 0 (or +inf)".into(),
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(TauCdf::Empirical(samples.into()))
    }

    /// `P(τ <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            TauCdf::Exponential { rate } => -(-rate * t).exp_m1(),
            TauCdf::Compensated(a) => -(-a.value(t)).exp_m1(),
            TauCdf::Empirical(xs) => xs.partition_point(|&x| x <= t) as f64 / xs.len() as f64,
        }
    }

    /// `P(t < τ)`, computed directly rather than as `1 - cdf` where possible.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            TauCdf::Exponential { rate } => (-rate * t).exp(),
            TauCdf::Compensated(a) => (-a.value(t)).exp(),
            TauCdf::Empirical(xs) => xs.len().saturating_sub(xs.partition_point(|&x| x <= t))
                as f64
                / xs.len() as f64,
        }
    }
}

/// Law of `τ`, which determines the law of the indicator process.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorProcessLaw {
    pub tau_cdf: TauCdf,
    pub description: String,
}

impl IndicatorProcessLaw {
    pub fn new(tau_cdf: TauCdf, description: impl Into<String>) -> Self {
        Self {
            tau_cdf,
            description: description.into(),
        }
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be > 0, got {rate}")));
        }
        Ok(Self::new(TauCdf::Exponential { rate }, format!("tau ~ Exp({rate})")))
    }
}

/// How a model turns its exponential variate into `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// `τ = A⁻¹(Z)` for the model's own compensator.
    CoxInverse,
    /// `τ = Z / rate`, regardless of the stated compensator.
    ScaledExponential { rate: f64 },
}

/// A jump-time sampler paired with its compensator.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpModel {
    pub name: String,
    pub compensator: Compensator,
    pub sampler: Sampler,
    pub tau_cdf: Option<TauCdf>,
    /// Which filtration story the model instantiates.
    pub metadata: String,
}

impl JumpModel {
    /// The jump time produced by exponential variate `z`.
    pub fn tau_from_exponential(&self, z: f64) -> Result<TimePoint> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("exponential variate must be > 0, got {z}")));
        }
        match self.sampler {
            Sampler::CoxInverse => self.compensator.generalized_inverse(z),
            Sampler::ScaledExponential { rate } => Ok(TimePoint::Finite(z / rate)),
        }
    }

    /// Draws `τ` from the first variate of `stream`.
    pub fn sample(&self, stream: &RngStream) -> Result<TimePoint> {
        self.tau_from_exponential(crate::rng::draw_exponential(stream))
    }

    pub fn law(&self) -> Option<IndicatorProcessLaw> {
        self.tau_cdf
            .clone()
            .map(|cdf| IndicatorProcessLaw::new(cdf, format!("law of tau under {}", self.name)))
    }
}

impl fmt::Display for JumpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, self.metadata)
    }
}

/// Homogeneous Poisson first arrival: `A(t) = rate · t`, `τ ~ Exp(rate)`.
pub fn poisson_model(rate: f64) -> Result<JumpModel> {
    Ok(JumpModel {
        name: format!("poisson(rate={rate})"),
        compensator: Compensator::linear(rate)?,
        sampler: Sampler::CoxInverse,
        tau_cdf: Some(TauCdf::Exponential { rate }),
        metadata: "first arrival of a Poisson process; compensator lambda*t in its natural filtration"
            .into(),
    })
}

/// First arrival of an inhomogeneous Poisson process with the given
/// cumulative intensity, drawn as `τ = A⁻¹(Z)`.
///
/// The intensity must be strictly increasing and unbounded so that `τ` is
/// finite almost surely.
pub fn inhomogeneous_model(cumulative_intensity: Compensator) -> Result<JumpModel> {
    if cumulative_intensity.range_sup().is_some() {
        return Err(Error::InvalidCompensator(
            "cumulative intensity is bounded, so tau would be infinite with positive probability"
                .into(),
        ));
    }
    if !cumulative_intensity.is_strictly_increasing() {
        return Err(Error::InvalidCompensator(
            "cumulative intensity must be strictly increasing".into(),
        ));
    }
    let name = match cumulative_intensity.form() {
        crate::compensator::CompensatorForm::Power { exponent } => {
            format!("inhomogeneous(power={exponent})")
        }
        crate::compensator::CompensatorForm::Linear { rate } => {
            format!("inhomogeneous(linear={rate})")
        }
        _ => "inhomogeneous(table)".to_string(),
    };
    Ok(JumpModel {
        name,
        compensator: cumulative_intensity.clone(),
        sampler: Sampler::CoxInverse,
        tau_cdf: Some(TauCdf::Compensated(cumulative_intensity)),
        metadata: "Cox construction with a deterministic cumulative intensity; Z revealed progressively"
            .into(),
    })
}

/// First jump of a continuous-time Markov chain leaving `label` at `exit_rate`.
pub fn ctmc_first_jump_model(exit_rate: f64, label: &str) -> Result<JumpModel> {
    Ok(JumpModel {
        name: format!("ctmc(rate={exit_rate},state={label})"),
        compensator: Compensator::linear(exit_rate)?,
        sampler: Sampler::CoxInverse,
        tau_cdf: Some(TauCdf::Exponential { rate: exit_rate }),
        metadata: format!(
            "holding time of a Markov chain started at state {label}; the first jump of a strong Markov process is totally inaccessible"
        ),
    })
}

/// Knots of the compensator with a flat piece on `[1, 2]`.
pub const FLAT_KNOTS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 2.0)];

/// Synthetic model whose compensator is flat on `[1, 2]` and has slope 1
/// elsewhere. `τ = A⁻¹(Z)` never lands inside the flat piece.
pub fn flat_compensator_model() -> JumpModel {
    let compensator =
        Compensator::tabulated(FLAT_KNOTS.to_vec(), 1.0).expect("flat knots are valid");
    JumpModel {
        name: "flat".into(),
        compensator: compensator.clone(),
        sampler: Sampler::CoxInverse,
        tau_cdf: Some(TauCdf::Compensated(compensator)),
        metadata: "Cox construction with a compensator that is not strictly increasing".into(),
    }
}

/// Draws `τ ~ Exp(rate)` but claims the compensator `A(t) = t`, so `A(τ)`
/// is `Exp(rate)` instead of `Exp(1)`.
pub fn negative_control_model(rate: f64) -> Result<JumpModel> {
    Ok(JumpModel {
        name: format!("negative-control(rate={rate})"),
        compensator: Compensator::linear(1.0)?,
        sampler: Sampler::ScaledExponential { rate },
        tau_cdf: Some(TauCdf::Exponential { rate }),
        metadata: "mislabelled on purpose: sampler and compensator disagree".into(),
    })
}

/// Builds a model from its catalog name and `key=value` parameters.
pub fn build_model(name: &str, params: &BTreeMap<String, String>) -> Result<JumpModel> {
    let allowed: &[&str] = match name {
        "poisson" => &["rate"],
        "inhomogeneous" => &["power", "table", "tail_slope"],
        "ctmc" => &["rate", "state"],
        "flat" => &[],
        NEGATIVE_CONTROL => &["rate"],
        _ => {
            return Err(Error::UnknownModel {
                name: name.to_string(),
                valid: CATALOG.join(", "),
            })
        }
    };
    if let Some(key) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParameter(format!(
            "model `{name}` has no parameter `{key}` (accepted: {})",
            if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
        )));
    }
    let real = |key: &str, default: f64| -> Result<f64> {
        params.get(key).map_or(Ok(default), |v| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{key}={v} is not a number")))
        })
    };
    match name {
        "poisson" => poisson_model(real("rate", 1.0)?),
        "inhomogeneous" => {
            let a = match params.get("table") {
                Some(path) => {
                    if params.contains_key("power") {
                        return Err(Error::InvalidParameter(
                            "give either power or table, not both".into(),
                        ));
                    }
                    let file = std::fs::File::open(path)
                        .map_err(|e| Error::Io(format!("{path}: {e}")))?;
                    Compensator::from_csv(file, real("tail_slope", 0.0)?)?
                }
                None => Compensator::power(real("power", 2.0)?)?,
            };
            inhomogeneous_model(a)
        }
        "ctmc" => ctmc_first_jump_model(
            real("rate", 3.0)?,
            params.get("state").map_or("s0", String::as_str),
        ),
        "flat" => Ok(flat_compensator_model()),
        _ => negative_control_model(real("rate", 2.0)?),
    }
}

/// The path `t ↦ 1{t >= τ}`; identically 0 when `τ = ∞`.
pub fn indicator_path(tau: TimePoint) -> Result<CadlagPath> {
    match tau {
        TimePoint::Infinite => CadlagPath::constant(0.0),
        TimePoint::Finite(t) if t > 0.0 => CadlagPath::step(vec![(0.0, 0.0), (t, 1.0)]),
        TimePoint::Finite(t) => Err(Error::Domain(format!("tau must be > 0, got {t}"))),
    }
}

/// `P_t f(x) = f(x) P(t < τ) + f(x + 1) P(τ <= t)`.
pub fn semigroup_apply<F: Fn(f64) -> f64>(f: F, t: f64, x: f64, law: &IndicatorProcessLaw) -> f64 {
    let p = law.tau_cdf.cdf(t);
    if p == 0.0 {
        return f(x);
    }
    f(x) * (1.0 - p) + f(x + 1.0) * p
}

/// Constants `(K1, K2)` with `E[f(X_u) | E_t] = K1 1{t >= τ} + K2 1{t < τ}`
/// for `u > t`.
///
/// `K1 = f(1)` and `K2 = [f(0) P(u < τ) + f(1) P(t < τ <= u)] / P(t < τ)`.
pub fn conditional_expectation_indicator<F: Fn(f64) -> f64>(
    f: F,
    u: f64,
    t: f64,
    law: &IndicatorProcessLaw,
) -> Result<(f64, f64)> {
    if !(t >= 0.0 && u > t && u.is_finite()) {
        return Err(Error::Domain(format!("need u > t >= 0, got u={u}, t={t}")));
    }
    let survive_t = law.tau_cdf.survival(t);
    if survive_t <= 0.0 {
        return Err(Error::Domain(format!(
            "P(t < tau) = 0 at t={t}; conditioning on a null event"
        )));
    }
    let survive_u = law.tau_cdf.survival(u);
    let jump_between = survive_t - survive_u;
    let k1 = f(1.0);
    let k2 = (f(0.0) * survive_u + k1 * jump_between) / survive_t;
    Ok((k1, k2))
}

/// Functions in C₀ used as witnesses for the Feller properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// `e^{-y²}`
    Gaussian,
    /// `1 / (1 + y²)`
    Cauchy,
    /// `max(0, 1 - |y|)`
    Tent,
}

impl Witness {
    pub const ALL: [Witness; 3] = [Witness::Gaussian, Witness::Cauchy, Witness::Tent];

    pub fn eval(self, y: f64) -> f64 {
        match self {
            Witness::Gaussian => (-y * y).exp(),
            Witness::Cauchy => 1.0 / (1.0 + y * y),
            Witness::Tent => (1.0 - y.abs()).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub x: f64,
    /// `max_t |P_t f(x)|` over the schedule.
    pub value: f64,
    /// `max(|f(x)|, |f(x + 1)|)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub t: f64,
    pub max_error: f64,
}

/// Outcome of [`feller_check`] for one witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FellerReport {
    pub witness: Witness,
    pub law: String,
    /// `max_x |P_0 f(x) - f(x)|`, which must be exactly zero.
    pub identity_max_error: f64,
    pub tails: Vec<TailCheck>,
    /// `e_k = max_x |P_{t_k} f(x) - f(x)|` along the schedule.
    pub deviations: Vec<Deviation>,
    pub deviations_nonincreasing: bool,
    pub passed: bool,
}

/// Checks the three Feller properties of the indicator process for one
/// witness function over a finite grid.
pub fn feller_check(
    law: &IndicatorProcessLaw,
    witness: Witness,
    x_grid: &[f64],
    t_schedule: &[f64],
) -> Result<FellerReport> {
    if x_grid.is_empty() {
        return Err(Error::EmptyInput("x grid"));
    }
    if t_schedule.is_empty() {
        return Err(Error::EmptyInput("t schedule"));
    }
    if t_schedule.iter().any(|t| !(*t > 0.0 && t.is_finite()))
        || t_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "t schedule must be positive and strictly decreasing".into(),
        ));
    }
    let f = |y| witness.eval(y);

    let identity_max_error = x_grid
        .iter()
        .map(|&x| (semigroup_apply(f, 0.0, x, law) - f(x)).abs())
        .fold(0.0, f64::max);

    let (x_min, x_max) = x_grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mut tails = vec![tail_check(law, f, x_min, t_schedule)];
    if x_max != x_min {
        tails.push(tail_check(law, f, x_max, t_schedule));
    }

    let deviations: Vec<Deviation> = t_schedule
        .iter()
        .map(|&t| Deviation {
            t,
            max_error: x_grid
                .iter()
                .map(|&x| (semigroup_apply(f, t, x, law) - f(x)).abs())
                .fold(0.0, f64::max),
        })
        .collect();
    let deviations_nonincreasing = deviations.windows(2).all(|w| w[1].max_error <= w[0].max_error);

    let passed = identity_max_error == 0.0
        && tails.iter().all(|c| c.value <= c.bound)
        && deviations_nonincreasing;
    Ok(FellerReport {
        witness,
        law: law.description.clone(),
        identity_max_error,
        tails,
        deviations,
        deviations_nonincreasing,
        passed,
    })
}

fn tail_check<F: Fn(f64) -> f64>(
    law: &IndicatorProcessLaw,
    f: F,
    x: f64,
    t_schedule: &[f64],
) -> TailCheck {
    let value = t_schedule
        .iter()
        .map(|&t| semigroup_apply(&f, t, x, law).abs())
        .fold(0.0, f64::max);
    TailCheck {
        x,
        value,
        bound: f(x).abs().max(f(x + 1.0).abs()),
    }
}
