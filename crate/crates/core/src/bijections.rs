//! Increasing bijections of the unit interval and their renewal constants.
//!
//! A draw `X ~ U[0,1]` is pushed through `f` to give an increment `f(X)`
//! with CDF `f⁻¹`. The long-run behaviour of the hitting count is governed
//! by three integrals of `f`: the mean increment, its variance, and the
//! mean limiting overshoot.

use std::f64::consts::E;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

pub use crate::quadrature::{integrate, DEFAULT_ABS_TOL};

/// `e - 1`, the length of the product problem's draw interval `[1, e]`.
pub const E_MINUS_1: f64 = E - 1.0;

/// Smallest admissible exponent for [`BijectionSpec::Power`].
pub const POWER_MIN: f64 = 0.1;
/// Largest admissible exponent for [`BijectionSpec::Power`].
pub const POWER_MAX: f64 = 10.0;

/// Exponent of `f(x) = x^p`, restricted to `[0.1, 10]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(POWER_MIN..=POWER_MAX).contains(&p) {
            return Err(Error::domain("p", p, format!("[{POWER_MIN}, {POWER_MAX}]")));
        }
        Ok(Exponent(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Validated knots of a piecewise-linear bijection.
///
/// The first knot is `(0, 0)`, the last `(1, 1)`, and both coordinates are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Knots {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Knots {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least two knots, got {}",
                points.len()
            )));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::InvalidSpec("first knot must be (0, 0)".into()));
        }
        if points[points.len() - 1] != (1.0, 1.0) {
            return Err(Error::InvalidSpec("last knot must be (1, 1)".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::InvalidSpec(format!(
                    "knots {} and {} are not strictly increasing in both coordinates",
                    i,
                    i + 1
                )));
            }
        }
        Ok(Knots {
            xs: points.iter().map(|p| p.0).collect(),
            ys: points.iter().map(|p| p.1).collect(),
        })
    }

    /// Parses the knot file format: one `x y` pair per line, first line
    /// `0 0`, last `1 1`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two numbers `x y`, found {} fields", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("`{s}` is not a finite number"),
                    })
            };
            points.push((parse(fields[0])?, parse(fields[1])?));
            lines.push(line_no);
        }

        let Some(&first) = points.first() else {
            return Err(Error::Parse {
                line: 1,
                message: "knot file is empty".into(),
            });
        };
        if first != (0.0, 0.0) {
            return Err(Error::Parse {
                line: lines[0],
                message: "first knot must be `0 0`".into(),
            });
        }
        if points.len() < 2 || points[points.len() - 1] != (1.0, 1.0) {
            return Err(Error::Parse {
                line: lines[lines.len() - 1],
                message: "last knot must be `1 1`".into(),
            });
        }
        for i in 1..points.len() {
            let (p, q) = (points[i - 1], points[i]);
            if !(q.0 > p.0 && q.1 > p.1) {
                return Err(Error::Parse {
                    line: lines[i],
                    message: format!(
                        "knot ({}, {}) does not strictly increase on ({}, {})",
                        q.0, q.1, p.0, p.1
                    ),
                });
            }
        }
        Knots::new(&points)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Knots::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn interior_xs(&self) -> &[f64] {
        &self.xs[1..self.xs.len() - 1]
    }

    fn interior_ys(&self) -> &[f64] {
        &self.ys[1..self.ys.len() - 1]
    }

    fn lerp(from: &[f64], to: &[f64], v: f64) -> f64 {
        // Segment whose right end is the first knot strictly beyond v.
        let hi = from.partition_point(|&k| k <= v).clamp(1, from.len() - 1);
        let lo = hi - 1;
        if v == from[hi] {
            return to[hi];
        }
        let s = (v - from[lo]) / (from[hi] - from[lo]);
        (1.0 - s) * to[lo] + s * to[hi]
    }
}

/// An increasing bijection `f : [0,1] → [0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum BijectionSpec {
    /// `f(x) = x`; the uniform-sum problem.
    Identity,
    /// `f(x) = ln(1 + (e-1)x)`; the product of draws from `[1, e]`.
    LogProduct,
    /// `f(x) = x^p`.
    Power(Exponent),
    /// Linear interpolation through user-supplied knots.
    PiecewiseLinear(Knots),
}

impl BijectionSpec {
    pub fn power(p: f64) -> Result<Self> {
        Exponent::new(p).map(BijectionSpec::Power)
    }

    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        Knots::new(points).map(BijectionSpec::PiecewiseLinear)
    }

    /// `f(x)` without a domain check. Callers guarantee `0 <= x <= 1`.
    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        match self {
            BijectionSpec::Identity => x,
            BijectionSpec::LogProduct => {
                if x == 1.0 {
                    1.0
                } else {
                    (E_MINUS_1 * x).ln_1p()
                }
            }
            BijectionSpec::Power(p) => x.powf(p.0),
            BijectionSpec::PiecewiseLinear(k) => Knots::lerp(&k.xs, &k.ys, x),
        }
    }

    /// `f⁻¹(u)` without a domain check. Callers guarantee `0 <= u <= 1`.
    #[inline]
    pub fn inverse(&self, u: f64) -> f64 {
        match self {
            BijectionSpec::Identity => u,
            BijectionSpec::LogProduct => {
                if u == 1.0 {
                    1.0
                } else {
                    u.exp_m1() / E_MINUS_1
                }
            }
            BijectionSpec::Power(p) => u.powf(p.0.recip()),
            BijectionSpec::PiecewiseLinear(k) => Knots::lerp(&k.ys, &k.xs, u),
        }
    }

    /// Evaluates `f(x)`.
    pub fn eval_f(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.forward(x))
    }

    /// Evaluates `f⁻¹(u)`, which is also `P(f(X) <= u)`.
    pub fn eval_finv(&self, u: f64) -> Result<f64> {
        check_unit("u", u)?;
        Ok(self.inverse(u))
    }

    /// Interior points in `x` where `f` is not smooth.
    pub fn kinks(&self) -> &[f64] {
        match self {
            BijectionSpec::PiecewiseLinear(k) => k.interior_xs(),
            _ => &[],
        }
    }

    /// Interior points in `u` where `f⁻¹` is not smooth.
    pub fn inverse_kinks(&self) -> &[f64] {
        match self {
            BijectionSpec::PiecewiseLinear(k) => k.interior_ys(),
            _ => &[],
        }
    }

    /// Largest admissible error of `f⁻¹(f(x))` against `x`.
    pub fn round_trip_tolerance(&self) -> f64 {
        match self {
            BijectionSpec::PiecewiseLinear(_) => 1e-9,
            _ => 1e-12,
        }
    }

    /// Short label used in CLI arguments and JSON output.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(name, v, "[0, 1]"))
    }
}

impl fmt::Display for BijectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BijectionSpec::Identity => write!(f, "identity"),
            BijectionSpec::LogProduct => write!(f, "logproduct"),
            BijectionSpec::Power(p) => write!(f, "power:{}", p.0),
            BijectionSpec::PiecewiseLinear(k) => write!(f, "piecewise:{}-knots", k.len()),
        }
    }
}

impl FromStr for BijectionSpec {
    type Err = Error;

    /// Parses a built-in name: `identity`, `logproduct`, or `power:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(BijectionSpec::Identity),
            "logproduct" => Ok(BijectionSpec::LogProduct),
            other => match other.strip_prefix("power:") {
                Some(p) => {
                    let p: f64 = p.parse().map_err(|_| {
                        Error::InvalidSpec(format!("`{p}` is not a valid exponent"))
                    })?;
                    BijectionSpec::power(p)
                }
                None => Err(Error::InvalidSpec(format!("unknown bijection `{s}`"))),
            },
        }
    }
}

/// Constants of the linear asymptote `N_f(t) ≈ (t + c) / mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticParams {
    /// Mean increment `E[f(X)]`.
    pub mu: f64,
    /// Increment variance `Var f(X)`.
    pub sigma2: f64,
    /// Mean limiting overshoot.
    pub c: f64,
    /// `1 / mu`.
    pub slope: f64,
    /// `c / mu`.
    pub intercept: f64,
}

impl AsymptoticParams {
    fn from_moments(mu: f64, sigma2: f64, c: f64) -> Self {
        AsymptoticParams {
            mu,
            sigma2,
            c,
            slope: mu.recip(),
            intercept: c / mu,
        }
    }

    /// Value of the asymptote `(t + c) / mu` at `t`.
    pub fn asymptote(&self, t: f64) -> f64 {
        (t + self.c) / self.mu
    }
}

/// Computes `mu`, `sigma2` and `c` for `spec` by adaptive quadrature.
///
/// `c` is the double integral `∫₀¹ ∫_{f⁻¹(u)}¹ (f(x) - u) dx du` divided by
/// `mu`; the inner integral runs at a tolerance ten times tighter than the
/// outer one.
pub fn asymptotic_params(spec: &BijectionSpec, abs_tol: f64) -> Result<AsymptoticParams> {
    if !(abs_tol > 0.0) {
        return Err(Error::domain("abs_tol", abs_tol, "(0, inf)"));
    }
    let quad = Quadrature::with_tol(abs_tol);
    let inner_quad = Quadrature::with_tol(abs_tol / 10.0);
    let kinks = spec.kinks();

    let mu = quad.integrate_with_breaks(|x| spec.forward(x), 0.0, 1.0, kinks)?;
    let sigma2 = quad.integrate_with_breaks(
        |x| {
            let d = spec.forward(x) - mu;
            d * d
        },
        0.0,
        1.0,
        kinks,
    )?;

    // The inner integral can fail; stash the first error instead of panicking
    // inside the closure.
    let failure = std::cell::RefCell::new(None);
    let overshoot_integral = quad.integrate_with_breaks(
        |u| {
            let lower = spec.inverse(u);
            match inner_quad.integrate_with_breaks(|x| spec.forward(x) - u, lower, 1.0, kinks) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        spec.inverse_kinks(),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }

    Ok(AsymptoticParams::from_moments(
        mu,
        sigma2.max(0.0),
        overshoot_integral / mu,
    ))
}
