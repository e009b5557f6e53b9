//! Exact expressions for the hitting counts.
//!
//! `N(t)` is the expected number of draws from `[1, e]` whose product first
//! exceeds `e^t`, equivalently the renewal function of
//! `f(x) = ln(1 + (e-1)x)`. `M(t)` is the same count for plain uniform sums.
//!
//! On `[0, 1]` the product problem reduces to simplex volumes `Θ_n` and
//! the survival probabilities `q_n = Θ_n / (e-1)^n`, whose sum is `N(t)`.

use std::f64::consts::E;

use crate::bijections::E_MINUS_1;
use crate::error::{Error, Result};
use crate::quadrature::neumaier_sum;

/// Largest `t` accepted by [`m_exact`].
///
/// The alternating terms grow like `e^t`; at the cap the largest term is
/// about `7e15`, so the absolute error of the double-precision sum is of
/// order one. See [`m_exact_error_bound`].
pub const M_EXACT_T_CAP: f64 = 30.0;

/// `e / (e - 1)`, the growth rate in the delay relation for `N`.
pub const GROWTH: f64 = E / E_MINUS_1;

fn check_range(name: &'static str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(name, v, format!("[{lo}, {hi}]")))
    }
}

/// `n`-th partial sum of the Taylor series of `e^{-t}`: `Σ_{k<n} (-t)^k / k!`.
/// The empty sum (`n = 0`) is zero.
pub fn b_n(t: f64, n: u32) -> f64 {
    let mut term = 1.0;
    let terms = (0..n).map(|k| {
        if k > 0 {
            term *= -t / f64::from(k);
        }
        term
    });
    neumaier_sum(terms)
}

/// Volume `Θ_n(t)` of `{x ∈ [1,e]^n : Π x_i <= e^t}` for `t ∈ [0, 1]`, `n >= 1`.
///
/// Equal to `(-1)^n (1 - b_n e^t)`, evaluated as the nonnegative tail
/// `e^t Σ_{j>=0} (-1)^j t^{n+j} / (n+j)!` to avoid the cancellation in
/// `1 - b_n e^t`.
pub fn theta_n(t: f64, n: u32) -> Result<f64> {
    check_range("t", t, 0.0, 1.0)?;
    if n == 0 {
        return Err(Error::Precondition("theta_n needs n >= 1".into()));
    }
    if n == 1 {
        return Ok(t.exp_m1());
    }
    Ok(t.exp() * exp_tail(t, n))
}

/// `Σ_{j>=0} (-1)^j t^{n+j} / (n+j)!` for `0 <= t <= 1`.
fn exp_tail(t: f64, n: u32) -> f64 {
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= t / f64::from(k);
    }
    if lead == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut term = lead;
    let mut k = n;
    loop {
        sum += term;
        k += 1;
        term *= -t / f64::from(k);
        if term.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break sum;
        }
    }
}

/// Probability `q_n(t)` that a product of `n` draws from `[1, e]` stays at or
/// below `e^t`, for `t ∈ [0, 1]`. `q_0 = 1`.
pub fn q_n(t: f64, n: u32) -> Result<f64> {
    check_range("t", t, 0.0, 1.0)?;
    if n == 0 {
        return Ok(1.0);
    }
    Ok((theta_n(t, n)? / E_MINUS_1.powi(n as i32)).min(1.0))
}

/// Exact `N(t) = (e-1)/e + e^{t - 1 + t/(e-1)}` on `[0, 1]`.
pub fn n_exact_01(t: f64) -> Result<f64> {
    check_range("t", t, 0.0, 1.0)?;
    Ok(E_MINUS_1 / E + (t - 1.0 + t / E_MINUS_1).exp())
}

/// Exact `N(t)` on `[1, 2]`, obtained by integrating the delay relation
/// `(N e^{-at})' = -a e^{-at} N(t-1) - e^{-at}` with `a = e/(e-1)` once from
/// the `[0, 1]` closed form.
pub fn n_exact_12(t: f64) -> Result<f64> {
    check_range("t", t, 1.0, 2.0)?;
    let decay = (-GROWTH).exp();
    let c = -E_MINUS_1 / E.powf(2.0 + 1.0 / E_MINUS_1) + 1.0 / E + decay / E_MINUS_1;
    let growth = (GROWTH * t).exp();
    Ok(growth * c + 2.0 * E_MINUS_1 / E - decay * t * growth / E_MINUS_1)
}

/// Exact `N(t)` for `t ∈ [0, 2]`, dispatching to the piece that covers `t`.
pub fn n_exact(t: f64) -> Result<f64> {
    check_range("t", t, 0.0, 2.0)?;
    if t <= 1.0 {
        n_exact_01(t)
    } else {
        n_exact_12(t)
    }
}

fn m_terms(t: f64) -> impl Iterator<Item = f64> {
    let last = t.floor() as u32;
    let mut factorial = 1.0;
    (0..=last).map(move |k| {
        if k > 0 {
            factorial *= f64::from(k);
        }
        let s = t - f64::from(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        // powi(0) is 1, which covers 0^0 at t = 0.
        sign * s.powi(k as i32) / factorial * s.exp()
    })
}

/// Expected number of uniform draws until their sum exceeds `t`:
/// `M(t) = Σ_{k=0}^{⌊t⌋} (-1)^k (t-k)^k e^{t-k} / k!`.
///
/// Valid for `0 <= t <= 30`; see [`M_EXACT_T_CAP`].
pub fn m_exact(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain("t", t, "[0, 30]"));
    }
    if t > M_EXACT_T_CAP {
        return Err(Error::Accuracy {
            t,
            cap: M_EXACT_T_CAP,
        });
    }
    Ok(neumaier_sum(m_terms(t)))
}

/// Rough absolute rounding-error bound for [`m_exact`] at `t`:
/// a few ulps of the largest magnitude term summed over all terms.
pub fn m_exact_error_bound(t: f64) -> f64 {
    if !(0.0..=M_EXACT_T_CAP).contains(&t) {
        return f64::INFINITY;
    }
    4.0 * f64::EPSILON * m_terms(t).map(f64::abs).sum::<f64>()
}

/// `N(t)` on `[0, 1]` as the partial sum `Σ q_n`, stopped once
/// `|q_n| < tol` with `n >= 5`.
pub fn n_series_01(t: f64, tol: f64) -> Result<f64> {
    check_range("t", t, 0.0, 1.0)?;
    if !(tol > 0.0) {
        return Err(Error::domain("tol", tol, "(0, inf)"));
    }
    let mut terms = vec![1.0];
    let mut n = 1;
    loop {
        let q = q_n(t, n)?;
        terms.push(q);
        if q.abs() < tol && n >= 5 {
            break;
        }
        n += 1;
    }
    Ok(neumaier_sum(terms))
}
