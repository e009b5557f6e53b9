//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::E;
use std::process::Command;
use std::time::{Duration, Instant};

use renewal_core::bijections::{asymptotic_params, BijectionSpec, DEFAULT_ABS_TOL, E_MINUS_1};
use renewal_core::closed_forms::{m_exact, n_exact_01, n_exact_12, n_series_01, theta_n};
use renewal_core::montecarlo::{
    coupled_stopping_times, estimate_n, estimate_wald_pair, limit_overshoot_density,
    overshoot_histogram, SimConfig,
};
use renewal_core::solver::solve;

const SEED: u64 = 42;
const MINUTE: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type Density = fn(f64) -> f64;

fn product_n1() -> f64 {
    (E - 1.0) / E + (1.0 / E_MINUS_1).exp()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn grid(a: f64, b: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| a + (b - a) * i as f64 / (points - 1) as f64)
}

fn value_at_one(spec: BijectionSpec, target: f64) -> Outcome {
    let (curve, solve_time) = timed(|| solve(&spec, 1.0, 1e-3));
    let solved = curve.map_err(fail)?.eval(1.0).map_err(fail)?;
    let (est, sim_time) = timed(|| estimate_n(&spec, SimConfig::new(1.0, 10_000_000, SEED)));
    let est = est.map_err(fail)?;
    let z = est.z_score(target);
    let err = (solved - target).abs();
    ensure(
        err <= 1e-5 && z <= 3.0 && solve_time < MINUTE && sim_time < MINUTE,
        format!(
            "solver err {err:.2e} ({:.2?}), simulation z {z:.2} ({:.2?})",
            solve_time, sim_time
        ),
    )
}

fn criterion_1() -> Outcome {
    value_at_one(BijectionSpec::Identity, E)
}

fn criterion_2() -> Outcome {
    let exact = n_exact_01(1.0).map_err(fail)?;
    let series = n_series_01(1.0, 1e-16).map_err(fail)?;
    ensure(
        (exact - product_n1()).abs() <= 1e-14 && (series - exact).abs() <= 1e-12,
        format!("closed form {exact:.10}, series {series:.10}"),
    )?;
    value_at_one(BijectionSpec::LogProduct, product_n1())
        .map(|d| format!("closed form {exact:.10}; {d}"))
}

fn criterion_3() -> Outcome {
    let product = solve(&BijectionSpec::LogProduct, 2.0, 1e-3).map_err(fail)?;
    let sum = solve(&BijectionSpec::Identity, 2.0, 1e-3).map_err(fail)?;
    let mut worst = [0.0f64; 3];
    for t in grid(0.0, 1.0, 200) {
        worst[0] =
            worst[0].max((product.eval(t).map_err(fail)? - n_exact_01(t).map_err(fail)?).abs());
    }
    for t in grid(1.0, 2.0, 200) {
        worst[1] =
            worst[1].max((product.eval(t).map_err(fail)? - n_exact_12(t).map_err(fail)?).abs());
    }
    for t in grid(0.0, 2.0, 200) {
        worst[2] = worst[2].max((sum.eval(t).map_err(fail)? - m_exact(t).map_err(fail)?).abs());
    }
    ensure(
        worst.iter().all(|&w| w <= 1e-5),
        format!(
            "max errors product[0,1] {:.2e}, product[1,2] {:.2e}, sum[0,2] {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for t in grid(0.0, 1.0, 100) {
        // e^t t^n / n! built incrementally.
        let mut term = t.exp();
        for n in 1..=30u32 {
            term *= t / n as f64;
            let lhs = theta_n(t, n + 1).map_err(fail)? + theta_n(t, n).map_err(fail)?;
            worst = worst.max((lhs - term).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max residual {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let sum = solve(&BijectionSpec::Identity, 10.0, 1e-3).map_err(fail)?;
    let product = solve(&BijectionSpec::LogProduct, 10.0, 1e-3).map_err(fail)?;
    let sum_asym = |t: f64| 2.0 * t + 2.0 / 3.0;
    let product_asym = |t: f64| E_MINUS_1 * (t + (E - 2.0) / 2.0);
    let gap = |c: &renewal_core::RenewalCurve, a: &dyn Fn(f64) -> f64, t: f64| {
        c.eval(t).map(|v| (v - a(t)).abs()).map_err(fail)
    };
    let (s10, s2) = (gap(&sum, &sum_asym, 10.0)?, gap(&sum, &sum_asym, 2.0)?);
    let (p10, p2) = (
        gap(&product, &product_asym, 10.0)?,
        gap(&product, &product_asym, 2.0)?,
    );
    ensure(
        s10 < 1e-3 && p10 < 1e-3 && s10 < s2 && p10 < p2,
        format!("sum gap {s10:.2e} (t=2: {s2:.2e}), product gap {p10:.2e} (t=2: {p2:.2e})"),
    )
}

fn criterion_6() -> Outcome {
    let sum = asymptotic_params(&BijectionSpec::Identity, DEFAULT_ABS_TOL).map_err(fail)?;
    let product = asymptotic_params(&BijectionSpec::LogProduct, DEFAULT_ABS_TOL).map_err(fail)?;
    let es = (sum.c - 1.0 / 3.0).abs();
    let ep = (product.c - (E - 2.0) / 2.0).abs();
    ensure(
        es <= 1e-10 && ep <= 1e-10,
        format!("c errors {es:.2e}, {ep:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let cases = [
        (BijectionSpec::LogProduct, 1.0 / E_MINUS_1),
        (BijectionSpec::power(0.5).map_err(fail)?, 1.0 / 1.5),
        (BijectionSpec::power(2.0).map_err(fail)?, 1.0 / 3.0),
    ];
    for (spec, mu) in cases {
        let curve = solve(&spec, 10.0, 1e-3).map_err(fail)?;
        let mut points = 0usize;
        for (t, n) in curve.grid() {
            ok &= t / mu < n && n <= (t + 1.0) / mu;
            points += 1;
        }
        details.push(format!("{spec} ({points} points)"));
    }
    ensure(ok, format!("bounds checked for {}", details.join(", ")))
}

fn criterion_8() -> Outcome {
    let product = solve(&BijectionSpec::LogProduct, 10.0, 1e-3).map_err(fail)?;
    let sum = solve(&BijectionSpec::Identity, 10.0, 1e-3).map_err(fail)?;
    let dominated = product
        .values()
        .iter()
        .zip(sum.values())
        .all(|(n, m)| n <= m);
    let s = coupled_stopping_times(
        &BijectionSpec::LogProduct,
        &BijectionSpec::Identity,
        SimConfig::new(10.0, 1_000_000, SEED),
    )
    .map_err(fail)?;
    ensure(
        dominated && s.first_not_later == s.samples && s.samples == 1_000_000,
        format!(
            "grid domination {dominated}, coupled paths {}/{}",
            s.first_not_later, s.samples
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let references: [(BijectionSpec, Density); 2] = [
        (BijectionSpec::LogProduct, |u| E - u.exp()),
        (BijectionSpec::Identity, |u| 2.0 * (1.0 - u)),
    ];
    for (spec, reference) in references {
        let mu = asymptotic_params(&spec, DEFAULT_ABS_TOL).map_err(fail)?.mu;
        // The closed-form references must agree with the general formula.
        let formula_gap = grid(0.0, 1.0, 101)
            .map(|u| (reference(u) - limit_overshoot_density(&spec, mu, u)).abs())
            .fold(0.0f64, f64::max);
        let h =
            overshoot_histogram(&spec, SimConfig::new(20.0, 1_000_000, SEED), 50).map_err(fail)?;
        let cmp = h.compare(reference).map_err(fail)?;
        ok &= cmp.worst_z <= 4.0 && formula_gap < 1e-12 && h.bins() == 50;
        details.push(format!("{spec} worst z {:.2}", cmp.worst_z));
    }
    ensure(ok, details.join(", "))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let specs = [
        BijectionSpec::Identity,
        BijectionSpec::LogProduct,
        BijectionSpec::power(2.0).map_err(fail)?,
    ];
    for spec in &specs {
        let mu = asymptotic_params(spec, DEFAULT_ABS_TOL).map_err(fail)?.mu;
        for t in [1.0, 5.0, 20.0] {
            let w = estimate_wald_pair(spec, SimConfig::new(t, 1_000_000, SEED)).map_err(fail)?;
            let se = w.n.std_error.hypot(w.stopped_sum.std_error / mu);
            worst = worst.max((w.n.mean - w.stopped_sum.mean / mu).abs() / se);
        }
    }
    ensure(worst <= 3.0, format!("worst z over 9 cases {worst:.2}"))
}

fn run_cli(args: &[&str], dir: &std::path::Path, output: &str) -> Result<Vec<u8>, String> {
    let path = dir.join(output);
    let status = Command::new(env!("CARGO_BIN_EXE_renewal"))
        .args(args)
        .arg("--output")
        .arg(&path)
        .env_remove("RENEWAL_SEED")
        .output()
        .map_err(fail)?;
    if !status.status.success() {
        return Err(format!("{args:?} exited with {}", status.status));
    }
    std::fs::read(&path).map_err(fail)
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(fail)?;
    let invocations: [&[&str]; 5] = [
        &["exact", "--target", "sum", "--t", "3.7"],
        &[
            "solve",
            "--f",
            "logproduct",
            "--t-max",
            "5",
            "--step",
            "1e-3",
        ],
        &["asympt", "--f", "power:2", "--format", "json"],
        &[
            "simulate",
            "--f",
            "logproduct",
            "--t",
            "3",
            "--samples",
            "200000",
            "--format",
            "json",
        ],
        &[
            "overshoot",
            "--f",
            "identity",
            "--t",
            "20",
            "--samples",
            "200000",
        ],
    ];
    for (i, args) in invocations.iter().enumerate() {
        let a = run_cli(args, dir.path(), &format!("a{i}"))?;
        let b = run_cli(args, dir.path(), &format!("b{i}"))?;
        if a != b || a.is_empty() {
            return Err(format!("outputs differ for {args:?}"));
        }
    }
    Ok(format!(
        "{} commands byte-identical across two runs",
        invocations.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 sum problem value at t=1", criterion_1),
        ("2 product problem value at t=1", criterion_2),
        ("3 closed-form agreement on [0,2]", criterion_3),
        ("4 series recurrence", criterion_4),
        ("5 asymptotes at t=10", criterion_5),
        ("6 offset constants", criterion_6),
        ("7 Wald bounds", criterion_7),
        ("8 domination", criterion_8),
        ("9 overshoot density", criterion_9),
        ("10 Wald identity", criterion_10),
        ("11 reproducibility", criterion_11),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (name, check) in criteria {
        let (outcome, took) = timed(check);
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail} [{took:.2?}]");
            }
        }
    }
    println!(
        "{} criteria, {failures} failed, total {:.2?}",
        criteria.len(),
        start.elapsed()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
