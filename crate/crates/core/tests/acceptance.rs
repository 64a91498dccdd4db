//! Acceptance suite: runs every exit criterion at its pinned tolerance and
//! prints one PASS/FAIL line per criterion. Exits non-zero if any fails.

use std::time::Instant;

use jumptime::compensator::Compensator;
use jumptime::cox::{cox_round_trip, cox_sample};
use jumptime::predictable::{
    build_y_process, extract_strict_subsequence, make_announcing_sequence, y_hitting_time,
    AnnouncingSequence, Scheme,
};
use jumptime::processes::{
    conditional_expectation_indicator, ctmc_first_jump_model, feller_check, flat_compensator_model,
    inhomogeneous_model, negative_control_model, poisson_model, IndicatorProcessLaw, JumpModel,
    Witness,
};
use jumptime::verify::{
    exp_law_verify, martingale_residual, standard_time_grid, with_workers, ExpLawReport,
};
use jumptime::{RngStream, TimePoint};

const N: usize = 100_000;
const ALPHA: f64 = 0.01;
const SEED: u64 = 42;

/// sqrt(ln(2/0.01) / 2e5), rounded as stated.
const KS_LIMIT: f64 = 0.005147;
const NEGATIVE_KS_FLOOR: f64 = 0.2;
const Z_LIMIT: f64 = 4.0;
const ODE_LIMIT: f64 = 0.012;
const ROUND_TRIP_SAMPLES: u64 = 10_000;
const ROUND_TRIP_TOL: f64 = 1e-9;
const INVERSE_LEVELS: usize = 1_000;
const IDENTITY_TOL: f64 = 1e-12;
const FELLER_E20_LIMIT: f64 = 1e-6;
const Y_GRID: usize = 10_000;

fn catalog() -> Vec<JumpModel> {
    vec![
        poisson_model(0.5).unwrap(),
        poisson_model(1.0).unwrap(),
        poisson_model(2.0).unwrap(),
        inhomogeneous_model(Compensator::power(2.0).unwrap()).unwrap(),
        ctmc_first_jump_model(3.0, "s0").unwrap(),
        flat_compensator_model(),
    ]
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn exp_law(reports: &[ExpLawReport]) -> Outcome {
    let worst = reports.iter().map(|r| r.ks_stat).fold(0.0, f64::max);
    let ok = reports.iter().all(|r| r.passed && r.ks_stat < KS_LIMIT);
    let lines: Vec<String> = reports
        .iter()
        .map(|r| format!("{} ks={:.6} dkw={:.6}", r.model_name, r.ks_stat, r.dkw_bound))
        .collect();
    outcome(ok, format!("max ks={worst:.6} < {KS_LIMIT}; {}", lines.join("; ")))
}

fn negative_control() -> Outcome {
    // oracle: sup_t (e^{-t} - e^{-2t}) is attained at t = ln 2 with value 1/4
    let t = 2f64.ln();
    let hand = (-t).exp() - (-2.0 * t).exp();
    let model = negative_control_model(2.0).unwrap();
    let r = exp_law_verify(&model, N, ALPHA, SEED).unwrap();
    let ok = !r.passed && r.ks_stat >= NEGATIVE_KS_FLOOR && (hand - 0.25).abs() < 1e-15;
    outcome(ok, format!("ks={:.6} (hand supremum {hand}), passed={}", r.ks_stat, r.passed))
}

fn martingale(models: &[JumpModel]) -> Outcome {
    // poisson(1): E[1{t >= τ}] = 1 - e^{-t} = E[t ∧ τ], so the exact residual is 0
    let closed_form_gap = standard_time_grid()
        .iter()
        .map(|&t| {
            let hit = -(-t).exp_m1();
            let stopped_mean = 1.0 - (-t).exp();
            (hit - stopped_mean).abs()
        })
        .fold(0.0, f64::max);
    let mut ok = closed_form_gap < 1e-15;
    let mut lines = Vec::new();
    for m in models {
        let r = martingale_residual(m, N, &standard_time_grid(), SEED).unwrap();
        let within = r.residuals.iter().all(|res| res.mean.abs() <= Z_LIMIT * res.stderr);
        ok &= within && r.residuals.len() == 10;
        lines.push(format!("{} max|z|={:.3}", r.model_name, r.max_abs_z));
    }
    outcome(ok, format!("closed-form gap {closed_form_gap:e}; {}", lines.join("; ")))
}

fn ode(reports: &[ExpLawReport]) -> Outcome {
    let worst = reports.iter().map(|r| r.ode_max_error).fold(0.0, f64::max);
    outcome(worst < ODE_LIMIT, format!("max ode error {worst:.6} < {ODE_LIMIT}"))
}

fn diffuse(reports: &[ExpLawReport]) -> Outcome {
    let worst = reports.iter().map(|r| r.max_atom_mass).fold(0.0, f64::max);
    let limit = 2.0 / N as f64;
    outcome(worst <= limit, format!("max atom mass {worst:e} <= {limit:e}"))
}

fn round_trip(models: &[JumpModel]) -> Outcome {
    let mut worst = 0.0f64;
    for m in models {
        for k in 0..ROUND_TRIP_SAMPLES {
            let s = cox_sample(&m.compensator, RngStream::new(SEED, k)).unwrap();
            let back = cox_round_trip(&m.compensator, s.tau).unwrap();
            let gap = (back.finite().unwrap() - s.tau.finite().unwrap()).abs();
            worst = worst.max(gap);
        }
    }
    outcome(worst <= ROUND_TRIP_TOL, format!("max |tau' - tau| = {worst:e}"))
}

fn inverse_identities(models: &[JumpModel]) -> Outcome {
    let mut worst = 0.0f64;
    for m in models {
        let a = &m.compensator;
        for j in 0..INVERSE_LEVELS {
            let s = 10.0 * j as f64 / INVERSE_LEVELS as f64;
            let r = a.generalized_inverse(s).unwrap().finite().unwrap();
            worst = worst.max((a.value(r) - s).abs());
        }
    }
    let flat = flat_compensator_model();
    let edge = flat.compensator.generalized_inverse(1.0).unwrap();
    let ok = worst <= IDENTITY_TOL && edge == TimePoint::Finite(1.0);
    outcome(ok, format!("max |A(A^-1(s)) - s| = {worst:e}; flat edge A^-1(1) = {edge}"))
}

fn feller() -> Outcome {
    let law = IndicatorProcessLaw::exponential(1.0).unwrap();
    let x_grid: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
    let schedule: Vec<f64> = (0..=20).map(|k| 0.5f64.powi(k)).collect();
    let mut ok = true;
    let mut lines = Vec::new();
    for w in Witness::ALL {
        let r = feller_check(&law, w, &x_grid, &schedule).unwrap();
        let e20 = r.deviations[20].max_error;
        ok &= r.identity_max_error == 0.0
            && r.deviations_nonincreasing
            && e20 < FELLER_E20_LIMIT
            && r.passed;
        lines.push(format!("{w:?} P0 err={} e20={e20:e}", r.identity_max_error));
    }
    outcome(ok, lines.join("; "))
}

fn tower() -> Outcome {
    let law = IndicatorProcessLaw::exponential(1.0).unwrap();
    let f = |y: f64| y;
    let mut worst = 0.0f64;
    for (t, u) in [(0.0, 1.0), (1.0, 2.0), (0.5, 3.0)] {
        let (k1, k2) = conditional_expectation_indicator(f, u, t, &law).unwrap();
        let via_g = k1 * law.tau_cdf.cdf(t) + k2 * law.tau_cdf.survival(t);
        let direct = f(1.0) * law.tau_cdf.cdf(u) + f(0.0) * law.tau_cdf.survival(u);
        worst = worst.max((via_g - direct).abs());
    }
    outcome(worst <= IDENTITY_TOL, format!("max |E g(X_t) - E f(X_u)| = {worst:e}"))
}

fn y_process() -> Outcome {
    let mut ok = true;
    let mut cases = 0;
    let mut worst_knot = 0.0f64;
    for scheme in [Scheme::Geometric, Scheme::Harmonic] {
        for m in [3usize, 8, 20] {
            for target in [1.0, 2.0, 10.0] {
                cases += 1;
                let seq = make_announcing_sequence(TimePoint::Finite(target), m, scheme).unwrap();
                let y = build_y_process(&seq).unwrap();
                for (i, &t) in y.knot_times().iter().enumerate() {
                    worst_knot = worst_knot.max((y.evaluate(t) - 1.0 / (i + 1) as f64).abs());
                }
                ok &= y.max_continuity_gap() == 0.0;
                let grid: Vec<f64> =
                    (0..Y_GRID).map(|k| 1.5 * target * k as f64 / (Y_GRID - 1) as f64).collect();
                ok &= grid.windows(2).all(|w| y.evaluate(w[1]) <= y.evaluate(w[0]));
                ok &= y_hitting_time(&y) == TimePoint::Finite(target);

                // every term repeated three times, plus leading zeros
                let repeated: Vec<f64> = std::iter::repeat_n(0.0, 2)
                    .chain(seq.times().iter().flat_map(|&t| [t, t, t]))
                    .collect();
                let noisy =
                    AnnouncingSequence::new(repeated, seq.target(), seq.closeness()).unwrap();
                let strict = extract_strict_subsequence(&noisy).unwrap();
                let y2 = build_y_process(&strict).unwrap();
                ok &= y2 == y && y_hitting_time(&y2) == TimePoint::Finite(target);
            }
        }
    }
    ok &= worst_knot <= IDENTITY_TOL;
    outcome(ok, format!("{cases} cases; max knot error {worst_knot:e}"))
}

fn determinism(models: &[JumpModel]) -> Outcome {
    let mut ok = true;
    for m in models {
        let a = serde_json::to_string(&exp_law_verify(m, N, ALPHA, SEED).unwrap()).unwrap();
        let b = serde_json::to_string(&exp_law_verify(m, N, ALPHA, SEED).unwrap()).unwrap();
        let one = with_workers(Some(1), || exp_law_verify(m, N, ALPHA, SEED)).unwrap().unwrap();
        let many = with_workers(Some(8), || exp_law_verify(m, N, ALPHA, SEED)).unwrap().unwrap();
        ok &= a == b
            && serde_json::to_string(&one).unwrap() == a
            && serde_json::to_string(&many).unwrap() == a;
        let grid = standard_time_grid();
        let r1 = with_workers(Some(1), || martingale_residual(m, N, &grid, SEED)).unwrap().unwrap();
        let r8 = with_workers(Some(8), || martingale_residual(m, N, &grid, SEED)).unwrap().unwrap();
        ok &= serde_json::to_string(&r1).unwrap() == serde_json::to_string(&r8).unwrap();
    }
    outcome(ok, "reruns and 1-vs-8 worker reports are byte-identical")
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let models = catalog();
    let started = Instant::now();
    let reports: Vec<ExpLawReport> = models
        .iter()
        .map(|m| exp_law_verify(m, N, ALPHA, SEED).unwrap())
        .collect();
    let exp_elapsed = started.elapsed();

    let criteria: Vec<Criterion> = vec![
        ("1 Exp(1) law of A(tau)", Box::new(|| {
            let mut o = exp_law(&reports);
            o.detail = format!("{} [{:.2}s]", o.detail, exp_elapsed.as_secs_f64());
            o
        })),
        ("2 negative control", Box::new(negative_control)),
        ("3 martingale identity", Box::new(|| martingale(&models))),
        ("4 ODE identity", Box::new(|| ode(&reports))),
        ("5 diffuse law", Box::new(|| diffuse(&reports))),
        ("6 Cox round trip", Box::new(|| round_trip(&models))),
        ("7 generalized inverse", Box::new(|| inverse_identities(&models))),
        ("8 Feller axioms", Box::new(feller)),
        ("9 conditional expectation", Box::new(tower)),
        ("10 Y process", Box::new(y_process)),
        ("11 determinism", Box::new(|| determinism(&models))),
    ];

    let mut failures = 0;
    for (name, check) in &criteria {
        let o = check();
        if !o.passed {
            failures += 1;
        }
        println!("[{}] criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.2}s",
        criteria.len() - failures,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
