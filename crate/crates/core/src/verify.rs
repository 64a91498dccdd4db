//! Monte Carlo verification of the `A(τ) ~ Exp(1)` law and the martingale
//! identity `E[1{t >= τ} - A(t ∧ τ)] = 0`.
//!
//! Replication `k` always draws from stream `(seed, k)` and results are
//! kept in replication order, so reports do not depend on the number of
//! worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::processes::JumpModel;
use crate::rng::{serialize_seed, RngStream};
use crate::time::TimePoint;

/// Mesh width of the trapezoidal rule in [`ode_identity_check`].
pub const ODE_MESH: f64 = 1e-3;

/// Number of ECDF probe points in an [`ExpLawReport`].
pub const ECDF_POINTS: usize = 50;

/// Grid used by [`ExpLawReport::ode_max_error`].
pub const ODE_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Runs `op` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(op()),
        Some(0) => Err(Error::InvalidParameter("workers must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            Ok(pool.install(op))
        }
    }
}

/// `n` jump times of `model`, replication `k` on stream `(seed, k)`.
pub fn sample_taus(model: &JumpModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let draws: Vec<Result<TimePoint>> = (0..n as u64)
        .into_par_iter()
        .map(|k| model.sample(&RngStream::new(seed, k)))
        .collect();
    draws
        .into_iter()
        .zip(0u64..)
        .map(|(tau, k)| match tau? {
            TimePoint::Finite(t) => Ok(t),
            TimePoint::Infinite => Err(Error::InfiniteTime {
                model: model.name.clone(),
                replication: k,
            }),
        })
        .collect()
}

/// `n` draws of `A(τ)` in replication order.
pub fn sample_a_tau(model: &JumpModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    let taus = sample_taus(model, n, seed)?;
    Ok(taus.into_iter().map(|t| model.compensator.value(t)).collect())
}

/// Exact one-sample Kolmogorov–Smirnov statistic against `reference_cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], reference_cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("KS statistic needs samples"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(ks_sorted(&xs, reference_cdf))
}

fn ks_sorted<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        let above = ((i + 1) as f64 / n - f).abs();
        let below = (i as f64 / n - f).abs();
        acc.max(above).max(below)
    })
}

/// Half-width `sqrt(ln(2/α) / 2n)` of the DKW confidence band.
pub fn dkw_bound(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

/// Standard exponential CDF.
pub fn exp1_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t).exp_m1()
    }
}

/// `F(t) = t - 1 + e^{-t}`, the solution of `F' = t - F`, `F(0) = 0`.
pub fn ode_solution(t: f64) -> f64 {
    t + (-t).exp_m1()
}

/// Trapezoidal `∫₀ᵗ cdf(s) ds` with mesh width at most `step`.
pub fn integrate_cdf<F: Fn(f64) -> f64>(cdf: F, t: f64, step: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let cells = (t / step).ceil().max(1.0) as usize;
    let h = t / cells as f64;
    let inner: f64 = (1..cells).map(|k| cdf(k as f64 * h)).sum();
    h * (0.5 * (cdf(0.0) + cdf(t)) + inner)
}

/// `max_t |∫₀ᵗ F̂(s) ds - (t - 1 + e^{-t})|` over `grid`, with `F̂` the
/// empirical CDF of `samples`.
pub fn ode_identity_check(samples: &[f64], grid: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    ode_error_sorted(&xs, grid)
}

fn ode_error_sorted(xs: &[f64], grid: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let ecdf = |t: f64| empirical_cdf(xs, t);
    grid.iter()
        .map(|&t| (integrate_cdf(ecdf, t, ODE_MESH) - ode_solution(t)).abs())
        .fold(0.0, f64::max)
}

fn empirical_cdf(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&x| x <= t) as f64 / sorted.len() as f64
}

/// Largest multiplicity of a bitwise-identical value, divided by the count.
pub fn max_atom_mass(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut bits: Vec<u64> = samples.iter().map(|x| x.to_bits()).collect();
    bits.sort_unstable();
    let longest = bits
        .chunk_by(|a, b| a == b)
        .map(<[u64]>::len)
        .max()
        .unwrap_or(0);
    longest as f64 / samples.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcdfPoint {
    pub t: f64,
    pub ecdf: f64,
    pub reference: f64,
}

/// Goodness-of-fit of `A(τ)` against `Exp(1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpLawReport {
    pub model_name: String,
    pub n: usize,
    #[serde(serialize_with = "serialize_seed")]
    pub seed: u64,
    pub ks_stat: f64,
    pub dkw_bound: f64,
    pub alpha: f64,
    pub passed: bool,
    pub ecdf_grid: Vec<EcdfPoint>,
    pub max_atom_mass: f64,
    pub ode_max_error: f64,
}

impl ExpLawReport {
    /// Builds the report from already drawn values of `A(τ)`.
    pub fn from_samples(model_name: &str, samples: &[f64], seed: u64, alpha: f64) -> Result<Self> {
        let n = samples.len();
        let bound = dkw_bound(n, alpha)?;
        let mut xs = samples.to_vec();
        xs.sort_by(f64::total_cmp);
        let ks_stat = ks_sorted(&xs, exp1_cdf);
        let ecdf_grid = (0..ECDF_POINTS)
            .map(|j| {
                let p = (j as f64 + 0.5) / ECDF_POINTS as f64;
                let t = -(-p).ln_1p();
                EcdfPoint {
                    t,
                    ecdf: empirical_cdf(&xs, t),
                    reference: exp1_cdf(t),
                }
            })
            .collect();
        Ok(Self {
            model_name: model_name.to_string(),
            n,
            seed,
            ks_stat,
            dkw_bound: bound,
            alpha,
            passed: ks_stat < bound,
            ecdf_grid,
            max_atom_mass: max_atom_mass(&xs),
            ode_max_error: ode_error_sorted(&xs, &ODE_GRID),
        })
    }

    pub fn write_ecdf_csv<W: Write>(&self, out: W) -> Result<()> {
        write_table(
            out,
            &["t", "ecdf", "reference"],
            self.ecdf_grid.iter().map(|p| [p.t, p.ecdf, p.reference]),
        )
    }
}

/// Samples `A(τ)` from `model` and tests it against `Exp(1)`.
pub fn exp_law_verify(model: &JumpModel, n: usize, alpha: f64, seed: u64) -> Result<ExpLawReport> {
    dkw_bound(n, alpha)?;
    let samples = sample_a_tau(model, n, seed)?;
    ExpLawReport::from_samples(&model.name, &samples, seed, alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Sample means of `1{t >= τ} - A(t ∧ τ)` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub model_name: String,
    pub n: usize,
    #[serde(serialize_with = "serialize_seed")]
    pub seed: u64,
    pub time_grid: Vec<f64>,
    pub residuals: Vec<Residual>,
    /// `max |mean| / stderr`; residuals with zero spread count as 0.
    pub max_abs_z: f64,
}

impl MartingaleReport {
    pub fn write_residuals_csv<W: Write>(&self, out: W) -> Result<()> {
        write_table(
            out,
            &["t", "mean", "stderr"],
            self.residuals.iter().map(|r| [r.t, r.mean, r.stderr]),
        )
    }
}

/// Ten evenly spaced times from 0.1 to 5.
pub fn standard_time_grid() -> Vec<f64> {
    (0..10).map(|k| 0.1 + 4.9 * k as f64 / 9.0).collect()
}

/// Estimates `E[1{t >= τ} - A(t ∧ τ)]` at each grid time, reusing one
/// draw of `τ` per replication across the grid.
pub fn martingale_residual(
    model: &JumpModel,
    n: usize,
    time_grid: &[f64],
    seed: u64,
) -> Result<MartingaleReport> {
    if let Some(t) = time_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Domain(format!("grid time {t} must be finite and >= 0")));
    }
    let taus = sample_taus(model, n, seed)?;
    let a = &model.compensator;
    let residuals: Vec<Residual> = time_grid
        .iter()
        .map(|&t| {
            let values = taus
                .iter()
                .map(|&tau| if t >= tau { 1.0 } else { 0.0 } - a.value(t.min(tau)));
            let (mean, stderr) = mean_and_stderr(values, n);
            Residual { t, mean, stderr }
        })
        .collect();
    let max_abs_z = residuals
        .iter()
        .map(|r| {
            if r.mean == 0.0 {
                0.0
            } else {
                r.mean.abs() / r.stderr
            }
        })
        .fold(0.0, f64::max);
    Ok(MartingaleReport {
        model_name: model.name.clone(),
        n,
        seed,
        time_grid: time_grid.to_vec(),
        residuals,
        max_abs_z,
    })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (nf - 1.0) / nf).sqrt())
}

fn write_table<W: Write, const K: usize>(
    out: W,
    header: &[&str; K],
    rows: impl Iterator<Item = [f64; K]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
