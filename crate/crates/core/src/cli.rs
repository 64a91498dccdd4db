//! The `jumptime` command line.
//!
//! Exit statuses: 0 when every check passes, 1 when a verification fails,
//! 2 on usage errors and 3 on runtime errors. Data goes to the output
//! channel (standard output or `--out`), diagnostics to standard error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::cox::cox_sample;
use crate::error::Error;
use crate::predictable::{build_y_process, make_announcing_sequence, y_hitting_time, Scheme};
use crate::processes::{build_model, feller_check, FellerReport, Witness, CATALOG, NEGATIVE_CONTROL};
use crate::rng::RngStream;
use crate::time::TimePoint;
use crate::verify::{exp_law_verify, martingale_residual, standard_time_grid, with_workers};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Residual z-scores at or above this fail `verify-martingale`.
pub const MARTINGALE_Z_LIMIT: f64 = 4.0;

/// Environment variable consulted for the seed when `--seed` is absent.
pub const SEED_ENV: &str = "JUMPTIME_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyExpLaw,
    VerifyMartingale,
    FellerCheck,
    CoxDemo,
    PredictableDemo,
    ListModels,
}

impl Command {
    fn needs_model(self) -> bool {
        !matches!(self, Command::ListModels | Command::PredictableDemo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "jumptime", version, about = "Jump times, compensators and the Cox construction")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Model name (see list-models)
    #[arg(long)]
    model: Option<String>,
    /// Model parameter as key=value; repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Defaults to $JUMPTIME_SEED, then 42
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated times
    #[arg(long)]
    grid: Option<String>,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<String>,
    pub params: BTreeMap<String, String>,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
    pub target: f64,
    pub m: usize,
    pub scheme: Scheme,
    pub grid: Option<Vec<f64>>,
}

/// A parse failure: the text to print and the status to exit with.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError {
    pub message: String,
    pub status: i32,
}

impl UsageError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            status: EXIT_USAGE,
        }
    }
}

/// Parses arguments (without the program name), reading the seed default
/// from `JUMPTIME_SEED`.
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    parse_args_with_env(argv, std::env::var(SEED_ENV).ok())
}

pub fn parse_args_with_env<I, S>(argv: I, env_seed: Option<String>) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let full = std::iter::once("jumptime".to_string()).chain(argv.into_iter().map(Into::into));
    let args = Args::try_parse_from(full).map_err(|e| UsageError {
        message: e.render().to_string(),
        status: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
    })?;

    let valid_models = || format!(" (valid models: {})", CATALOG.join(", "));
    if args.command.needs_model() {
        match args.model.as_deref() {
            None => {
                return Err(UsageError::new(format!(
                    "error: --model is required for this command{}",
                    valid_models()
                )))
            }
            Some(name) if !CATALOG.contains(&name) && name != NEGATIVE_CONTROL => {
                return Err(UsageError::new(format!(
                    "error: --model: unknown model `{name}`{}",
                    valid_models()
                )))
            }
            _ => {}
        }
    }

    let mut params = BTreeMap::new();
    for p in &args.params {
        let (k, v) = p
            .split_once('=')
            .filter(|(k, _)| !k.is_empty())
            .ok_or_else(|| UsageError::new(format!("error: --param expects key=value, got `{p}`")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }

    if args.n == 0 {
        return Err(UsageError::new("error: --n must be >= 1"));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(UsageError::new("error: --alpha must lie in (0, 1)"));
    }
    if args.workers == Some(0) {
        return Err(UsageError::new("error: --workers must be >= 1"));
    }
    let seed = match (args.seed, env_seed) {
        (Some(s), _) => s,
        (None, Some(s)) => s.trim().parse().map_err(|_| {
            UsageError::new(format!("error: {SEED_ENV}=`{s}` is not an unsigned 64-bit integer"))
        })?,
        (None, None) => 42,
    };
    let target = args.target.unwrap_or(1.0);
    if !(target.is_finite() && target > 0.0) {
        return Err(UsageError::new("error: --target must be finite and > 0"));
    }
    let m = args.m.unwrap_or(8);
    if m == 0 {
        return Err(UsageError::new("error: --m must be >= 1"));
    }
    let scheme = match args.scheme.as_deref() {
        None => Scheme::Geometric,
        Some(s) => s
            .parse()
            .map_err(|e: Error| UsageError::new(format!("error: --scheme: {e}")))?,
    };
    let grid = args
        .grid
        .as_deref()
        .map(|g| {
            g.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|t| t.is_finite() && *t >= 0.0)
                        .ok_or_else(|| UsageError::new(format!("error: --grid: bad time `{s}`")))
                })
                .collect::<Result<Vec<f64>, _>>()
        })
        .transpose()?;

    Ok(RunConfig {
        command: args.command,
        model: args.model,
        params,
        n: args.n,
        alpha: args.alpha,
        seed,
        out: args.out,
        format: args.format,
        workers: args.workers,
        target,
        m,
        scheme,
        grid,
    })
}

/// Outcome of a command before it is written out.
struct Output {
    body: Vec<u8>,
    passed: bool,
    /// Extra diagnostic text for the error channel.
    note: Option<Vec<u8>>,
}

impl Output {
    fn data(body: Vec<u8>, passed: bool) -> Self {
        Self { body, passed, note: None }
    }
}

/// Executes `config`, writing data to `out` (unless `--out` is set) and
/// diagnostics to `err`. Returns the exit status.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = with_workers(config.workers, || execute(config));
    let output = match result.and_then(|r| r) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return match e {
                Error::UnknownModel { .. } | Error::InvalidParameter(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            };
        }
    };
    if let Some(note) = &output.note {
        let _ = err.write_all(note);
    }
    let written = match &config.out {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(&output.body)),
        None => out.write_all(&output.body).and_then(|_| out.flush()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: writing output: {e}");
        return EXIT_RUNTIME;
    }
    if output.passed {
        EXIT_OK
    } else {
        let _ = writeln!(err, "verification failed");
        EXIT_FAILED
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, Error> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    body.push(b'\n');
    Ok(body)
}

fn csv_rows(header: &str, rows: impl Iterator<Item = String>) -> Vec<u8> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s.into_bytes()
}

fn execute(config: &RunConfig) -> Result<Output, Error> {
    let model = match &config.model {
        Some(name) if config.command.needs_model() => Some(build_model(name, &config.params)?),
        _ => None,
    };
    match config.command {
        Command::ListModels => list_models(config.format),
        Command::VerifyExpLaw => {
            let model = model.expect("model validated");
            let report = exp_law_verify(&model, config.n, config.alpha, config.seed)?;
            let body = match config.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_ecdf_csv(&mut buf)?;
                    buf
                }
            };
            Ok(Output::data(body, report.passed))
        }
        Command::VerifyMartingale => {
            let model = model.expect("model validated");
            let grid = config.grid.clone().unwrap_or_else(standard_time_grid);
            let report = martingale_residual(&model, config.n, &grid, config.seed)?;
            let body = match config.format {
                Format::Json => to_json(&report)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_residuals_csv(&mut buf)?;
                    buf
                }
            };
            Ok(Output::data(body, report.max_abs_z < MARTINGALE_Z_LIMIT))
        }
        Command::FellerCheck => {
            let model = model.expect("model validated");
            let law = model.law().ok_or_else(|| {
                Error::InvalidParameter(format!("model {} has no closed-form law of tau", model.name))
            })?;
            let x_grid = feller_x_grid();
            let schedule = feller_schedule();
            let reports = Witness::ALL
                .iter()
                .map(|&w| feller_check(&law, w, &x_grid, &schedule))
                .collect::<Result<Vec<_>, _>>()?;
            let passed = reports.iter().all(|r| r.passed);
            let body = match config.format {
                Format::Json => to_json(&FellerSummary {
                    model_name: &model.name,
                    passed,
                    reports: &reports,
                })?,
                Format::Csv => csv_rows(
                    "witness,t,max_error",
                    reports.iter().flat_map(|r| {
                        let name = serde_json::to_value(r.witness)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default();
                        r.deviations
                            .iter()
                            .map(move |d| format!("{name},{},{}", d.t, d.max_error))
                    }),
                ),
            };
            Ok(Output::data(body, passed))
        }
        Command::CoxDemo => {
            let model = model.expect("model validated");
            let samples = (0..config.n as u64)
                .map(|k| cox_sample(&model.compensator, RngStream::new(config.seed, k)))
                .collect::<Result<Vec<_>, _>>()?;
            let body = match config.format {
                Format::Json => {
                    let mut buf = Vec::new();
                    for s in &samples {
                        serde_json::to_writer(&mut buf, s).map_err(|e| Error::Io(e.to_string()))?;
                        buf.push(b'\n');
                    }
                    buf
                }
                Format::Csv => csv_rows(
                    "z,tau,a_at_tau,seed,stream_id",
                    samples.iter().map(|s| {
                        format!("{},{},{},{},{}", s.z, s.tau, s.a_at_tau, s.stream.seed, s.stream.stream_id)
                    }),
                ),
            };
            Ok(Output::data(body, true))
        }
        Command::PredictableDemo => {
            let seq = make_announcing_sequence(TimePoint::new(config.target)?, config.m, config.scheme)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let y = build_y_process(&seq)?;
            let hitting_time = y_hitting_time(&y);
            let summary = PredictableSummary {
                target: config.target,
                m: config.m,
                scheme: config.scheme,
                hitting_time,
                max_knot_error: y.max_knot_error(),
                max_continuity_gap: y.max_continuity_gap(),
                knots: y
                    .path()
                    .knots()
                    .iter()
                    .map(|&(time, value)| Knot { time, value })
                    .collect(),
            };
            let passed = hitting_time == TimePoint::Finite(config.target)
                && summary.max_continuity_gap == 0.0;
            match config.format {
                Format::Json => Ok(Output::data(to_json(&summary)?, passed)),
                Format::Csv => {
                    let mut line = serde_json::to_vec(&SummaryOnly::from(&summary))
                        .map_err(|e| Error::Io(e.to_string()))?;
                    line.push(b'\n');
                    let body = csv_rows(
                        "time,value",
                        summary.knots.iter().map(|k| format!("{},{}", k.time, k.value)),
                    );
                    Ok(Output {
                        body,
                        passed,
                        note: Some(line),
                    })
                }
            }
        }
    }
}

/// `x` grid for `feller-check`: -10 to 10 in steps of 0.25.
pub fn feller_x_grid() -> Vec<f64> {
    (-40..=40).map(|k| k as f64 * 0.25).collect()
}

/// `t_k = 2^{-k}` for `k = 0..=20`.
pub fn feller_schedule() -> Vec<f64> {
    (0..=20).map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Serialize)]
struct FellerSummary<'a> {
    model_name: &'a str,
    passed: bool,
    reports: &'a [FellerReport],
}

#[derive(Serialize)]
struct Knot {
    time: f64,
    value: f64,
}

#[derive(Serialize)]
struct PredictableSummary {
    target: f64,
    m: usize,
    scheme: Scheme,
    hitting_time: TimePoint,
    max_knot_error: f64,
    max_continuity_gap: f64,
    knots: Vec<Knot>,
}

#[derive(Serialize)]
struct SummaryOnly {
    target: f64,
    m: usize,
    scheme: Scheme,
    hitting_time: TimePoint,
    max_knot_error: f64,
}

impl From<&PredictableSummary> for SummaryOnly {
    fn from(s: &PredictableSummary) -> Self {
        Self {
            target: s.target,
            m: s.m,
            scheme: s.scheme,
            hitting_time: s.hitting_time,
            max_knot_error: s.max_knot_error,
        }
    }
}

#[derive(Serialize)]
struct ModelEntry {
    name: &'static str,
    params: &'static str,
    description: &'static str,
}

const MODEL_ENTRIES: [ModelEntry; 4] = [
    ModelEntry {
        name: "poisson",
        params: "rate=1",
        description: "first arrival of a Poisson process, A(t) = rate*t",
    },
    ModelEntry {
        name: "inhomogeneous",
        params: "power=2 | table=<csv> tail_slope=<s>",
        description: "Cox construction with A(t) = t^power or a tabulated cumulative intensity",
    },
    ModelEntry {
        name: "ctmc",
        params: "rate=3 state=s0",
        description: "holding time of a Markov chain in its initial state",
    },
    ModelEntry {
        name: "flat",
        params: "",
        description: "compensator with a flat piece on [1, 2]",
    },
];

fn list_models(format: Format) -> Result<Output, Error> {
    let body = match format {
        Format::Json => to_json(&MODEL_ENTRIES)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "params", "description"])
                .and_then(|_| {
                    MODEL_ENTRIES
                        .iter()
                        .try_for_each(|m| w.write_record([m.name, m.params, m.description]))
                })
                .map_err(|e| Error::Io(e.to_string()))?;
            w.into_inner().map_err(|e| Error::Io(e.to_string()))?
        }
    };
    Ok(Output::data(body, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = parse_args_with_env(["verify-exp-law", "--model", "poisson", "--param", "rate=2"], None)
            .unwrap();
        assert_eq!(c.command, Command::VerifyExpLaw);
        assert_eq!((c.n, c.alpha, c.seed), (100_000, 0.01, 42));
        assert_eq!(c.params.get("rate").map(String::as_str), Some("2"));
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn unknown_model_lists_catalog() {
        let e = parse_args_with_env(["verify-exp-law", "--model", "nosuch"], None).unwrap_err();
        assert_eq!(e.status, EXIT_USAGE);
        assert!(e.message.contains("--model"));
        for name in CATALOG {
            assert!(e.message.contains(name));
        }
    }

    #[test]
    fn predictable_routing() {
        let c = parse_args_with_env(
            ["predictable-demo", "--target", "2", "--m", "8", "--scheme", "geometric"],
            None,
        )
        .unwrap();
        assert_eq!(c.command, Command::PredictableDemo);
        assert_eq!((c.target, c.m, c.scheme), (2.0, 8, Scheme::Geometric));
        assert_eq!(c.model, None);
    }

    #[test]
    fn usage_errors_name_the_flag() {
        let e = parse_args_with_env(["verify-exp-law", "--model", "poisson", "--bogus", "1"], None)
            .unwrap_err();
        assert_eq!(e.status, EXIT_USAGE);
        assert!(e.message.contains("--bogus"));
        let e = parse_args_with_env(["verify-exp-law", "--model", "poisson", "--alpha", "2"], None)
            .unwrap_err();
        assert!(e.message.contains("--alpha"));
        let e = parse_args_with_env(["cox-demo"], None).unwrap_err();
        assert!(e.message.contains("--model"));
        let e = parse_args_with_env(["feller-check", "--model", "poisson", "--param", "rate"], None)
            .unwrap_err();
        assert!(e.message.contains("--param"));
        let e = parse_args_with_env(["verify-martingale", "--model", "flat", "--grid", "1,x"], None)
            .unwrap_err();
        assert!(e.message.contains("--grid"));
        let e = parse_args_with_env(["predictable-demo", "--scheme", "cubic"], None).unwrap_err();
        assert!(e.message.contains("--scheme"));
        assert!(parse_args_with_env(["frobnicate"], None).is_err());
    }

    #[test]
    fn seed_from_environment_only_without_flag() {
        let c = parse_args_with_env(["list-models"], Some("7".into())).unwrap();
        assert_eq!(c.seed, 7);
        let c = parse_args_with_env(["list-models", "--seed", "9"], Some("7".into())).unwrap();
        assert_eq!(c.seed, 9);
        assert!(parse_args_with_env(["list-models"], Some("-1".into())).is_err());
    }

    #[test]
    fn help_is_not_an_error_status() {
        let e = parse_args_with_env(["--help"], None).unwrap_err();
        assert_eq!(e.status, EXIT_OK);
    }
}
