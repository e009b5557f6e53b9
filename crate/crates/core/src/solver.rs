//! Marching solver for the renewal equation
//!
//! ```text
//! N_f(t) = 1 + ∫₀¹ N_f(t - f(w)) dw,   N_f(s) = 0 for s < 0,
//! ```
//!
//! written in increment space as `N(t) = 1 + ∫ N(t - s) dG(s)` with
//! `G = f⁻¹` the CDF of `f(X)`. On a uniform grid `t_j = j·h` the history
//! `N(t_j - s)` is linear between nodes inside each cell `[c·h, (c+1)·h]`,
//! so the integral becomes a fixed convolution with product-trapezoid
//! weights `∫ hat · dG`. The weights depend only on `f` and `h`, are
//! computed once by quadrature of `G`, and the unknown `N(t_j)` enters
//! only through the first cell, so each step is an explicit division.
//! Local error is `O(h²)`.

use std::io::Write;

use serde::Serialize;

use crate::bijections::{AsymptoticParams, BijectionSpec};
use crate::closed_forms::GROWTH;
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature::Quadrature;

/// Default grid spacing in `t`.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Coarsest grid spacing [`solve`] accepts.
pub const MAX_STEP: f64 = 1e-2;

/// Error budget constant: the marching error is about `C·h²`.
const BUDGET_CONSTANT: f64 = 10.0;

/// Product-trapezoid weights for one increment law and grid spacing.
#[derive(Debug, Clone)]
struct ConvolutionWeights {
    /// Weight of the left node of cell `c` (history index `j - c`).
    fall: Vec<f64>,
    /// Weight of the right node of cell `c` (history index `j - c - 1`).
    rise: Vec<f64>,
    /// `combined[k] = rise[k-1] + fall[k]`, the full weight on `N_{j-k}`.
    combined: Vec<f64>,
}

impl ConvolutionWeights {
    fn new(spec: &BijectionSpec, h: f64) -> Result<Self> {
        let cells = ((1.0 / h) - 1e-9).ceil().max(1.0) as usize;
        let quad = Quadrature {
            abs_tol: 1e-15,
            max_panels: 400,
        };
        let g = |s: f64| spec.inverse(s);
        let mut fall = Vec::with_capacity(cells + 1);
        let mut rise = Vec::with_capacity(cells);
        for c in 0..cells {
            let a = c as f64 * h;
            let b = a + h;
            let b_clip = b.min(1.0);
            let area = quad.integrate_with_breaks(g, a, b_clip, spec.inverse_kinks())?;
            let (ga, gb) = (spec.inverse(a), spec.inverse(b_clip));
            fall.push(((b - b_clip) / h * gb - ga + area / h).max(0.0));
            rise.push(((b_clip - a) / h * gb - area / h).max(0.0));
        }
        fall.push(0.0);
        let mut combined = vec![0.0; cells + 1];
        for k in 1..=cells {
            combined[k] = rise[k - 1] + fall[k];
        }
        Ok(ConvolutionWeights {
            fall,
            rise,
            combined,
        })
    }

    fn cells(&self) -> usize {
        self.rise.len()
    }
}

/// Numerical renewal function `N_f` on the grid `t_j = j·step`.
#[derive(Debug, Clone)]
pub struct RenewalCurve {
    spec: BijectionSpec,
    step: f64,
    t_max: f64,
    interp: MonotoneCubic,
}

/// Solves for `N_f` on `[0, t_max]` with grid spacing `step`.
pub fn solve(spec: &BijectionSpec, t_max: f64, step: f64) -> Result<RenewalCurve> {
    if !(step > 0.0 && step <= MAX_STEP) {
        return Err(Error::domain("step", step, format!("(0, {MAX_STEP}]")));
    }
    if !(t_max >= step) || !t_max.is_finite() {
        return Err(Error::domain("t_max", t_max, format!("[{step}, inf)")));
    }

    let weights = ConvolutionWeights::new(spec, step)?;
    let cells = weights.cells();
    let nodes = (t_max / step - 1e-9).ceil() as usize + 1;
    let diag = 1.0 - weights.fall[0];

    let mut values: Vec<f64> = Vec::with_capacity(nodes);
    values.push(1.0);
    for j in 1..nodes {
        let mut acc = 0.0;
        if j <= cells {
            // Cells beyond t_j read negative history, which is zero; the
            // cell ending at s = t_j contributes only its rise half.
            for k in 1..j {
                acc += weights.combined[k] * values[j - k];
            }
            acc += weights.rise[j - 1] * values[0];
        } else {
            for k in 1..=cells {
                acc += weights.combined[k] * values[j - k];
            }
        }
        values.push((1.0 + acc) / diag);
    }

    Ok(RenewalCurve {
        spec: spec.clone(),
        step,
        t_max,
        interp: MonotoneCubic::new(0.0, step, values),
    })
}

impl RenewalCurve {
    pub fn spec(&self) -> &BijectionSpec {
        &self.spec
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `N_f` at the grid points `t_j = j·step`.
    pub fn values(&self) -> &[f64] {
        self.interp.values()
    }

    /// Grid point `t_j`.
    pub fn grid_t(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values()
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.grid_t(j), v))
    }

    /// Documented marching error budget, `10·step²`.
    pub fn error_budget(&self) -> f64 {
        BUDGET_CONSTANT * self.step * self.step
    }

    /// Interpolated `N_f(t)` for `t ∈ [0, t_max]`; exact at grid points.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::domain("t", t, format!("[0, {}]", self.t_max)));
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        let j = (t / self.step).round();
        if self.grid_t(j as usize) == t {
            return self.values()[j as usize];
        }
        self.interp.eval(t)
    }

    /// History lookup with the zero convention for negative arguments.
    fn history(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            self.eval_unchecked(s)
        }
    }

    /// `1 + ∫₀¹ N(t - f(w)) dw - N(t)` evaluated by adaptive quadrature in
    /// `w` on the interpolated curve; splits at `w = f⁻¹(t)` where the
    /// history drops to zero.
    pub fn recurrence_residual(&self, t: f64, abs_tol: f64) -> Result<f64> {
        let n_t = self.eval(t)?;
        let mut breaks: Vec<f64> = self.spec.kinks().to_vec();
        if t < 1.0 {
            breaks.push(self.spec.inverse(t));
        }
        let quad = Quadrature {
            abs_tol,
            max_panels: 50_000,
        };
        let integral = quad.integrate_with_breaks(
            |w| self.history(t - self.spec.forward(w)),
            0.0,
            1.0,
            &breaks,
        )?;
        Ok(1.0 + integral - n_t)
    }

    /// `|N'(t) - (e/(e-1))(N(t) - N(t-1)) + 1|` with a central difference
    /// for `N'`. Only meaningful for the product bijection.
    pub fn check_derivative_relation(&self, t: f64) -> Result<f64> {
        if self.spec != BijectionSpec::LogProduct {
            return Err(Error::Precondition(format!(
                "the delay relation holds for logproduct only, curve is {}",
                self.spec
            )));
        }
        let h = self.step;
        if !(t >= 1.0 + h && t <= self.t_max - h) {
            return Err(Error::domain(
                "t",
                t,
                format!("[{}, {}]", 1.0 + h, self.t_max - h),
            ));
        }
        let derivative = (self.eval(t + h)? - self.eval(t - h)?) / (2.0 * h);
        let rhs = GROWTH * (self.eval(t)? - self.eval(t - 1.0)?) - 1.0;
        Ok((derivative - rhs).abs())
    }

    /// `N_f(t) - (t + c_f)/mu_f`.
    pub fn asymptote_gap(&self, params: &AsymptoticParams, t: f64) -> Result<f64> {
        Ok(self.eval(t)? - params.asymptote(t))
    }

    /// Writes `t,N` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,N")?;
        for (t, n) in self.grid() {
            writeln!(out, "{t:.16e},{n:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// JSON document with the grid and values.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct CurveJson<'a> {
            spec: String,
            step: f64,
            t_max: f64,
            t: Vec<f64>,
            #[serde(rename = "N")]
            n: &'a [f64],
        }
        let doc = CurveJson {
            spec: self.spec.label(),
            step: self.step,
            t_max: self.t_max,
            t: (0..self.values().len()).map(|j| self.grid_t(j)).collect(),
            n: self.values(),
        };
        serde_json::to_value(doc).expect("curve serializes")
    }
}
