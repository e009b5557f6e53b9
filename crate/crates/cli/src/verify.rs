//! The `verify` command: invariant checks with one PASS/FAIL line each.

use std::f64::consts::E;
use std::fmt;

use renewal_core::bijections::{asymptotic_params, BijectionSpec, DEFAULT_ABS_TOL, E_MINUS_1};
use renewal_core::closed_forms::{m_exact, n_exact, n_exact_01, n_exact_12, n_series_01, theta_n};
use renewal_core::montecarlo::{
    coupled_stopping_times, estimate_n, estimate_wald_pair, k_concentration_check,
    limit_overshoot_density, overshoot_histogram, SimConfig,
};
use renewal_core::solver::solve;
use renewal_core::{RenewalCurve, Result};

use crate::args::{Suite, VerifyArgs};

/// Horizon used by the large-t simulation checks.
pub const LARGE_T: f64 = 20.0;
/// Horizon of the solver bound and domination checks.
pub const BOUND_T_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Measured value and tolerance it was held to.
    Measured { value: f64, tol: f64, pass: bool },
    /// The computation itself failed.
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
}

impl Check {
    /// Passes when `value <= tol`.
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            outcome: Outcome::Measured {
                value,
                tol,
                pass: value <= tol,
            },
        }
    }

    fn from_result(name: &str, r: Result<(f64, f64)>) -> Self {
        match r {
            Ok((value, tol)) => Check::at_most(name, value, tol),
            Err(e) => Check {
                name: name.to_string(),
                outcome: Outcome::Error(e.to_string()),
            },
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self.outcome, Outcome::Measured { pass: true, .. })
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.outcome {
            Outcome::Measured { value, tol, .. } => write!(
                f,
                "{status} {:<48} measured={value:.3e} tol={tol:.1e}",
                self.name
            ),
            Outcome::Error(msg) => write!(f, "{status} {:<48} error: {msg}", self.name),
        }
    }
}

/// Runs the selected suites, calling `report` after each check.
pub fn run(args: &VerifyArgs, mut report: impl FnMut(&Check)) -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |c: Check| {
        report(&c);
        out.push(c);
    };
    let all = args.suite == Suite::All;
    if all || args.suite == Suite::Bijections {
        bijection_checks().into_iter().for_each(&mut push);
    }
    if all || args.suite == Suite::ClosedForms {
        closed_form_checks().into_iter().for_each(&mut push);
    }
    if all || args.suite == Suite::Solver {
        solver_checks(args.step).into_iter().for_each(&mut push);
    }
    if all || args.suite == Suite::Simulation {
        let cfg = |t: f64| SimConfig::new(t, args.samples, args.seed).workers(args.workers);
        simulation_checks(cfg).into_iter().for_each(&mut push);
    }
    out
}

fn grid(a: f64, b: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| a + (b - a) * i as f64 / (points - 1) as f64)
}

fn named_specs() -> Vec<BijectionSpec> {
    vec![
        BijectionSpec::Identity,
        BijectionSpec::LogProduct,
        BijectionSpec::power(0.5).expect("valid exponent"),
        BijectionSpec::power(2.0).expect("valid exponent"),
    ]
}

fn bijection_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    for spec in named_specs() {
        let worst = grid(0.0, 1.0, 1001)
            .map(|x| (spec.inverse(spec.forward(x)) - x).abs())
            .fold(0.0f64, f64::max);
        checks.push(Check::at_most(
            format!("round trip {spec}"),
            worst,
            spec.round_trip_tolerance(),
        ));
    }
    let expected = [
        (BijectionSpec::Identity, 0.5, 1.0 / 3.0),
        (BijectionSpec::LogProduct, 1.0 / E_MINUS_1, (E - 2.0) / 2.0),
    ];
    for (spec, mu, c) in expected {
        checks.push(Check::from_result(
            &format!("mu {spec}"),
            asymptotic_params(&spec, DEFAULT_ABS_TOL).map(|p| ((p.mu - mu).abs(), 1e-10)),
        ));
        checks.push(Check::from_result(
            &format!("c {spec}"),
            asymptotic_params(&spec, DEFAULT_ABS_TOL).map(|p| ((p.c - c).abs(), 1e-10)),
        ));
    }
    for spec in named_specs() {
        // c = E[f²] / (2 E[f]) by an integration by parts.
        let r = asymptotic_params(&spec, DEFAULT_ABS_TOL).and_then(|p| {
            let m2 = renewal_core::integrate(|x| spec.forward(x).powi(2), 0.0, 1.0, 1e-13)?;
            Ok(((p.c - m2 / (2.0 * p.mu)).abs(), 1e-9))
        });
        checks.push(Check::from_result(
            &format!("c second-moment form {spec}"),
            r,
        ));
    }
    checks
}

fn closed_form_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let theta = || -> Result<(f64, f64)> {
        let mut worst = 0.0f64;
        for t in grid(0.0, 1.0, 100) {
            let mut fact = 1.0;
            for n in 1..=30u32 {
                fact *= n as f64;
                let rhs = t.exp() * t.powi(n as i32) / fact;
                let res = (theta_n(t, n + 1)? + theta_n(t, n)? - rhs).abs();
                worst = worst.max(res);
            }
        }
        Ok((worst, 1e-12))
    };
    checks.push(Check::from_result("theta recurrence n<=30", theta()));

    let n1 = (E - 1.0) / E + (1.0 / E_MINUS_1).exp();
    checks.push(Check::from_result(
        "N(1) closed form",
        n_exact_01(1.0).map(|v| ((v - n1).abs(), 1e-14)),
    ));
    checks.push(Check::from_result(
        "closed forms agree at t=1",
        n_exact_01(1.0).and_then(|a| Ok(((a - n_exact_12(1.0)?).abs(), 1e-12))),
    ));
    checks.push(Check::from_result(
        "series vs closed form on [0,1]",
        grid(0.0, 1.0, 101).try_fold((0.0f64, 1e-10), |(w, tol), t| {
            Ok((w.max((n_series_01(t, 1e-15)? - n_exact_01(t)?).abs()), tol))
        }),
    ));
    checks.push(Check::from_result(
        "M(1) = e",
        m_exact(1.0).map(|v| ((v - E).abs(), 1e-14)),
    ));
    checks.push(Check::from_result(
        "M(2) = e^2 - e",
        m_exact(2.0).map(|v| ((v - (E * E - E)).abs(), 1e-13)),
    ));
    checks
}

fn max_oracle_error(
    curve: &RenewalCurve,
    oracle: impl Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mut worst = 0.0f64;
    for t in grid(0.0, 2.0, 200) {
        worst = worst.max((curve.eval(t)? - oracle(t)?).abs());
    }
    Ok((worst, 1e-5))
}

/// Largest violation of `t/mu < N(t) <= (t+1)/mu` over the grid, as a
/// nonpositive margin when the bounds hold.
fn wald_margin(curve: &RenewalCurve, mu: f64) -> f64 {
    curve
        .grid()
        .map(|(t, n)| {
            let lower = t / mu - n;
            let upper = n - (t + 1.0) / mu;
            if lower >= 0.0 {
                f64::INFINITY
            } else {
                lower.max(upper)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn solver_checks(step: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let product = solve(&BijectionSpec::LogProduct, BOUND_T_MAX, step);
    let sum = solve(&BijectionSpec::Identity, BOUND_T_MAX, step);

    checks.push(Check::from_result(
        "solver vs closed form (product, [0,2])",
        product
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|c| max_oracle_error(c, n_exact)),
    ));
    checks.push(Check::from_result(
        "solver vs closed form (sum, [0,2])",
        sum.as_ref()
            .map_err(Clone::clone)
            .and_then(|c| max_oracle_error(c, m_exact)),
    ));

    for (name, curve, spec) in [
        ("product", &product, BijectionSpec::LogProduct),
        ("sum", &sum, BijectionSpec::Identity),
    ] {
        let gaps = curve.as_ref().map_err(Clone::clone).and_then(|c| {
            let p = asymptotic_params(&spec, DEFAULT_ABS_TOL)?;
            Ok((
                c.asymptote_gap(&p, 10.0)?.abs(),
                c.asymptote_gap(&p, 2.0)?.abs(),
            ))
        });
        checks.push(Check::from_result(
            &format!("asymptote gap at t=10 ({name})"),
            gaps.clone().map(|(g10, _)| (g10, 1e-3)),
        ));
        // Passes when the ratio is below one: the gap shrinks.
        checks.push(Check::from_result(
            &format!("gap(10) / gap(2) ({name})"),
            gaps.map(|(g10, g2)| (g10 / g2, 1.0 - f64::EPSILON)),
        ));
    }

    checks.push(Check::from_result(
        "Wald bounds margin (product)",
        product
            .as_ref()
            .map_err(Clone::clone)
            .map(|c| (wald_margin(c, 1.0 / E_MINUS_1), 0.0)),
    ));
    for p in [0.5, 2.0] {
        let r = BijectionSpec::power(p)
            .and_then(|spec| solve(&spec, BOUND_T_MAX, step))
            .map(|c| (wald_margin(&c, 1.0 / (p + 1.0)), 0.0));
        checks.push(Check::from_result(
            &format!("Wald bounds margin (power:{p})"),
            r,
        ));
    }

    checks.push(Check::from_result(
        "domination max N - M",
        match (&product, &sum) {
            (Ok(n), Ok(m)) => Ok((
                n.values()
                    .iter()
                    .zip(m.values())
                    .map(|(a, b)| a - b)
                    .fold(f64::NEG_INFINITY, f64::max),
                0.0,
            )),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        },
    ));

    for (name, curve) in [("product", &product), ("sum", &sum)] {
        checks.push(Check::from_result(
            &format!("recurrence residual ({name})"),
            curve.as_ref().map_err(Clone::clone).and_then(|c| {
                let mut worst = 0.0f64;
                for t in [0.5, 1.5, 3.0, 7.5, 10.0] {
                    worst = worst.max(c.recurrence_residual(t, 1e-10)?.abs());
                }
                Ok((worst, c.error_budget()))
            }),
        ));
        // Largest decrease between consecutive grid values.
        checks.push(Check::from_result(
            &format!("monotone curve ({name})"),
            curve.as_ref().map_err(Clone::clone).map(|c| {
                let drop = c
                    .values()
                    .windows(2)
                    .map(|w| w[0] - w[1])
                    .fold(0.0f64, f64::max);
                (drop, 0.0)
            }),
        ));
    }
    checks
}

fn simulation_checks(cfg: impl Fn(f64) -> SimConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    let n1 = (E - 1.0) / E + (1.0 / E_MINUS_1).exp();
    for (name, spec, target) in [
        ("M(1) by simulation", BijectionSpec::Identity, E),
        ("N(1) by simulation", BijectionSpec::LogProduct, n1),
    ] {
        checks.push(Check::from_result(
            &format!("{name} (z)"),
            estimate_n(&spec, cfg(1.0)).map(|e| (e.z_score(target), 3.0)),
        ));
    }

    let power2 = BijectionSpec::power(2.0).expect("valid exponent");
    for spec in [BijectionSpec::Identity, BijectionSpec::LogProduct, power2] {
        for t in [1.0, 5.0, LARGE_T] {
            let r = asymptotic_params(&spec, DEFAULT_ABS_TOL).and_then(|p| {
                let w = estimate_wald_pair(&spec, cfg(t))?;
                let se = w.n.std_error.hypot(w.stopped_sum.std_error / p.mu);
                let d = (w.n.mean - w.stopped_sum.mean / p.mu).abs();
                Ok((if d == 0.0 { 0.0 } else { d / se }, 3.0))
            });
            checks.push(Check::from_result(
                &format!("Wald identity {spec} t={t} (z)"),
                r,
            ));
        }
    }

    checks.push(Check::from_result(
        "coupled paths with K_product > K_sum",
        coupled_stopping_times(
            &BijectionSpec::LogProduct,
            &BijectionSpec::Identity,
            cfg(10.0),
        )
        .map(|s| ((s.samples - s.first_not_later) as f64, 0.0)),
    ));

    for spec in [BijectionSpec::LogProduct, BijectionSpec::Identity] {
        let r = asymptotic_params(&spec, DEFAULT_ABS_TOL).and_then(|p| {
            let h = overshoot_histogram(&spec, cfg(LARGE_T), 50)?;
            let cmp = h.compare(|u| limit_overshoot_density(&spec, p.mu, u))?;
            Ok((cmp.worst_z, 4.0))
        });
        checks.push(Check::from_result(
            &format!("overshoot density {spec} (worst bin z)"),
            r,
        ));

        let r = asymptotic_params(&spec, DEFAULT_ABS_TOL).and_then(|p| {
            let w = estimate_wald_pair(&spec, cfg(LARGE_T))?;
            let d = (w.stopped_sum.mean - LARGE_T - p.c).abs();
            Ok((d / w.stopped_sum.std_error, 3.0))
        });
        checks.push(Check::from_result(
            &format!("overshoot mean vs c {spec} (z)"),
            r,
        ));

        checks.push(Check::from_result(
            &format!("K outside 6 sqrt(t) window {spec}"),
            k_concentration_check(&spec, cfg(25.0), 6.0).map(|f| (f, 1e-3)),
        ));
    }
    checks
}
