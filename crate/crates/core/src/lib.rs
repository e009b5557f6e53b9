//! Expected hitting counts for running sums of transformed uniform draws.
//!
//! Draw `X_1, X_2, …` uniformly from `[0, 1]`, push each through an
//! increasing bijection `f`, and stop at the first `K_f` whose partial sum
//! of `f(X_i)` exceeds `t`. This crate computes `N_f(t) = E[K_f]`:
//!
//! * [`closed_forms`]: exact values for `f(x) = x` (any `t <= 30`) and for
//!   `f(x) = ln(1 + (e-1)x)` on `[0, 2]`;
//! * [`solver`]: a marching solver for the renewal equation, any `f`, any `t`;
//! * [`bijections`]: the transforms and the constants `(mu, sigma², c)` of
//!   the asymptote `N_f(t) ≈ (t + c)/mu`;
//! * [`montecarlo`]: seeded, parallel simulation of `K_f`, the stopped sum
//!   and the overshoot.

// `!(x > 0.0)` is used on purpose so that NaN arguments are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bijections;
pub mod closed_forms;
pub mod error;
pub mod interp;
pub mod montecarlo;
pub mod quadrature;
pub mod solver;

pub use bijections::{asymptotic_params, AsymptoticParams, BijectionSpec, Exponent, Knots};
pub use error::{Error, Result};
pub use montecarlo::{
    chernoff_bound, coupled_stopping_times, estimate_n, estimate_stopped_sum, estimate_wald_pair,
    k_concentration_check, overshoot_histogram, sample_k, OvershootHistogram, SimConfig,
    SimEstimate,
};
pub use quadrature::integrate;
pub use solver::{solve, RenewalCurve};
