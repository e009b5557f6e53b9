//! Seeded simulation of the stopping time `K_f`, the stopped sum and the
//! overshoot.
//!
//! Every worker owns a ChaCha8 substream selected by `(seed, worker index)`
//! and a private accumulator. Accumulators are merged in worker order, so
//! results are bit-identical for a fixed `(seed, samples, t, spec, workers)`
//! regardless of thread scheduling. Changing the worker count changes the
//! partition of samples and therefore the estimate.

use rand::distr::OpenClosed01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bijections::{asymptotic_params, BijectionSpec, DEFAULT_ABS_TOL};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Draw cap per sample path.
pub const ITERATION_CAP: u64 = 1_000_000_000;
/// Worker count used when callers do not choose one.
pub const DEFAULT_WORKERS: usize = 4;
/// Fixed default seed.
pub const DEFAULT_SEED: u64 = 42;
/// Smallest histogram resolution accepted.
pub const MIN_BINS: usize = 10;

/// Independent substream `worker` of the generator seeded by `seed`.
pub fn substream(seed: u64, worker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker);
    rng
}

/// Draws until the running sum of `f(X_i)` strictly exceeds `t`.
///
/// Returns the number of draws and the overshoot `Σ f(X_i) - t ∈ (0, 1]`.
/// Uniforms are drawn from `(0, 1]`, so every increment is positive.
pub fn sample_k<R: Rng + ?Sized>(spec: &BijectionSpec, t: f64, rng: &mut R) -> Result<(u64, f64)> {
    // Tracking the remaining distance keeps the overshoot inside (0, 1]
    // under rounding: rem >= 0 and inc <= 1 give rem - inc >= -1.
    let mut remaining = t;
    let mut k = 0u64;
    while remaining >= 0.0 {
        if k == ITERATION_CAP {
            return Err(Error::IterationCap { cap: ITERATION_CAP });
        }
        let x: f64 = rng.sample(OpenClosed01);
        remaining -= spec.forward(x);
        k += 1;
    }
    Ok((k, -remaining))
}

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Simulation settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t: f64,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn new(t: f64, samples: u64, seed: u64) -> Self {
        SimConfig {
            t,
            samples,
            seed,
            workers: DEFAULT_WORKERS,
        }
    }

    pub fn workers(self, workers: usize) -> Self {
        SimConfig { workers, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::domain("t", self.t, "[0, inf)"));
        }
        if self.samples == 0 {
            return Err(Error::Precondition("samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Precondition("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn share(&self, worker: usize) -> u64 {
        let w = self.workers as u64;
        self.samples / w + u64::from((worker as u64) < self.samples % w)
    }

    /// Runs every worker's share through `visit` and merges the accumulators
    /// in worker order.
    fn run<A, F>(&self, visit: F) -> Result<A>
    where
        A: Default + Send + Merge,
        F: Fn(&mut A, &mut ChaCha8Rng) -> Result<()> + Sync,
    {
        self.validate()?;
        let parts: Vec<Result<A>> = (0..self.workers)
            .into_par_iter()
            .map(|w| {
                let mut rng = substream(self.seed, w as u64);
                let mut acc = A::default();
                for _ in 0..self.share(w) {
                    visit(&mut acc, &mut rng)?;
                }
                Ok(acc)
            })
            .collect();
        let mut total = A::default();
        for part in parts {
            total.merge_from(part?);
        }
        Ok(total)
    }
}

trait Merge {
    fn merge_from(&mut self, other: Self);
}

impl Merge for Moments {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

#[derive(Default)]
struct PathMoments {
    k: Moments,
    sum: Moments,
}

impl Merge for PathMoments {
    fn merge_from(&mut self, other: Self) {
        self.k.merge(&other.k);
        self.sum.merge(&other.sum);
    }
}

/// Monte Carlo estimate of a mean with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub t: f64,
    pub spec: BijectionSpec,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl SimEstimate {
    fn from_moments(spec: &BijectionSpec, cfg: &SimConfig, m: &Moments) -> Self {
        SimEstimate {
            t: cfg.t,
            spec: spec.clone(),
            samples: cfg.samples,
            seed: cfg.seed,
            workers: cfg.workers,
            mean: m.mean,
            std_error: m.std_error(),
        }
    }

    /// Standardized distance `|mean - target| / std_error` (zero when both
    /// the error and the distance vanish).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct EstimateJson {
            t: f64,
            spec: String,
            samples: u64,
            seed: u64,
            workers: usize,
            mean: f64,
            std_error: f64,
        }
        serde_json::to_value(EstimateJson {
            t: self.t,
            spec: self.spec.label(),
            samples: self.samples,
            seed: self.seed,
            workers: self.workers,
            mean: self.mean,
            std_error: self.std_error,
        })
        .expect("estimate serializes")
    }
}

/// Estimates of `E[K_f]` and of the stopped sum from the same sample paths.
#[derive(Debug, Clone, PartialEq)]
pub struct WaldPair {
    pub n: SimEstimate,
    pub stopped_sum: SimEstimate,
}

/// Simulates `K_f` and `Σ_{i<=K_f} f(X_i)` on the same paths.
pub fn estimate_wald_pair(spec: &BijectionSpec, cfg: SimConfig) -> Result<WaldPair> {
    let m: PathMoments = cfg.run(|acc: &mut PathMoments, rng| {
        let (k, over) = sample_k(spec, cfg.t, rng)?;
        acc.k.push(k as f64);
        acc.sum.push(cfg.t + over);
        Ok(())
    })?;
    Ok(WaldPair {
        n: SimEstimate::from_moments(spec, &cfg, &m.k),
        stopped_sum: SimEstimate::from_moments(spec, &cfg, &m.sum),
    })
}

/// Estimates `N_f(t) = E[K_f]`.
pub fn estimate_n(spec: &BijectionSpec, cfg: SimConfig) -> Result<SimEstimate> {
    let m: Moments = cfg.run(|acc: &mut Moments, rng| {
        acc.push(sample_k(spec, cfg.t, rng)?.0 as f64);
        Ok(())
    })?;
    Ok(SimEstimate::from_moments(spec, &cfg, &m))
}

/// Estimates `S_f(t) = E[Σ_{i<=K_f} f(X_i)]`.
pub fn estimate_stopped_sum(spec: &BijectionSpec, cfg: SimConfig) -> Result<SimEstimate> {
    let m: Moments = cfg.run(|acc: &mut Moments, rng| {
        acc.push(cfg.t + sample_k(spec, cfg.t, rng)?.1);
        Ok(())
    })?;
    Ok(SimEstimate::from_moments(spec, &cfg, &m))
}

#[derive(Default)]
struct BinCounts {
    counts: Vec<u64>,
    min: f64,
    max: f64,
    seen: bool,
}

impl BinCounts {
    fn record(&mut self, bins: usize, over: f64) {
        if self.counts.is_empty() {
            self.counts = vec![0; bins];
        }
        let idx = ((over * bins as f64) as usize).min(bins - 1);
        self.counts[idx] += 1;
        if self.seen {
            self.min = self.min.min(over);
            self.max = self.max.max(over);
        } else {
            (self.min, self.max, self.seen) = (over, over, true);
        }
    }
}

impl Merge for BinCounts {
    fn merge_from(&mut self, other: Self) {
        if !other.seen {
            return;
        }
        if !self.seen {
            *self = other;
            return;
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }
}

/// Empirical density of the overshoot on equal-width bins over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootHistogram {
    pub t: f64,
    pub spec: BijectionSpec,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub densities: Vec<f64>,
    /// Smallest and largest overshoot observed.
    pub min_overshoot: f64,
    pub max_overshoot: f64,
}

/// Histograms the overshoot `O = Σ_{i<=K_f} f(X_i) - t`.
pub fn overshoot_histogram(
    spec: &BijectionSpec,
    cfg: SimConfig,
    bins: usize,
) -> Result<OvershootHistogram> {
    if bins < MIN_BINS {
        return Err(Error::Precondition(format!(
            "need at least {MIN_BINS} bins, got {bins}"
        )));
    }
    let acc: BinCounts = cfg.run(|acc: &mut BinCounts, rng| {
        acc.record(bins, sample_k(spec, cfg.t, rng)?.1);
        Ok(())
    })?;
    let width = 1.0 / bins as f64;
    let n = cfg.samples as f64;
    let densities = acc.counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(OvershootHistogram {
        t: cfg.t,
        spec: spec.clone(),
        samples: cfg.samples,
        seed: cfg.seed,
        workers: cfg.workers,
        bin_edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        counts: acc.counts,
        densities,
        min_overshoot: acc.min,
        max_overshoot: acc.max,
    })
}

/// Per-bin comparison of a histogram against a reference density.
#[derive(Debug, Clone, PartialEq)]
pub struct BinComparison {
    /// Reference probability mass of each bin.
    pub expected_mass: Vec<f64>,
    /// `(count - n·p) / sqrt(n·p·(1-p))` for each bin.
    pub z: Vec<f64>,
    /// Largest `|z|`.
    pub worst_z: f64,
    /// Largest `|density - mean reference density|` over bins.
    pub sup_distance: f64,
}

impl OvershootHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// `Σ density · width`.
    pub fn total_mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// Compares bin counts against the binomial law implied by `density`.
    pub fn compare<F: Fn(f64) -> f64>(&self, density: F) -> Result<BinComparison> {
        let quad = Quadrature::with_tol(1e-13);
        let n = self.samples as f64;
        let mut expected_mass = Vec::with_capacity(self.bins());
        let mut z = Vec::with_capacity(self.bins());
        let mut sup_distance = 0.0f64;
        for (i, e) in self.bin_edges.windows(2).enumerate() {
            let p = quad.integrate(&density, e[0], e[1])?;
            let sd = (n * p * (1.0 - p)).sqrt();
            let dev = self.counts[i] as f64 - n * p;
            z.push(if sd > 0.0 {
                dev / sd
            } else if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
            sup_distance = sup_distance.max((self.densities[i] - p / (e[1] - e[0])).abs());
            expected_mass.push(p);
        }
        let worst_z = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(BinComparison {
            expected_mass,
            z,
            worst_z,
            sup_distance,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct HistogramJson<'a> {
            t: f64,
            spec: String,
            samples: u64,
            seed: u64,
            workers: usize,
            bin_edges: &'a [f64],
            densities: &'a [f64],
        }
        serde_json::to_value(HistogramJson {
            t: self.t,
            spec: self.spec.label(),
            samples: self.samples,
            seed: self.seed,
            workers: self.workers,
            bin_edges: &self.bin_edges,
            densities: &self.densities,
        })
        .expect("histogram serializes")
    }
}

/// Limiting overshoot density `(1 - f⁻¹(u)) / mu`.
pub fn limit_overshoot_density(spec: &BijectionSpec, mu: f64, u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        (1.0 - spec.inverse(u)) / mu
    } else {
        0.0
    }
}

/// Chernoff tail bound `min(1, 2·exp(-δ²μ/(2+δ)))` for
/// `P(|S_n - μ| >= δμ)` with increments in `[0, 1]`.
pub fn chernoff_bound(mu: f64, delta: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::domain("mu", mu, "(0, inf)"));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("delta", delta, "(0, inf)"));
    }
    Ok((2.0 * (-delta * delta * mu / (2.0 + delta)).exp()).min(1.0))
}

/// Fraction of paths with `|K_f - 1 - t/mu_f| > c·√t`.
pub fn k_concentration_check(spec: &BijectionSpec, cfg: SimConfig, c: f64) -> Result<f64> {
    if !(cfg.t >= 1.0) {
        return Err(Error::domain("t", cfg.t, "[1, inf)"));
    }
    if !(c > 0.0) {
        return Err(Error::domain("c", c, "(0, inf]"));
    }
    let mu = asymptotic_params(spec, DEFAULT_ABS_TOL)?.mu;
    let centre = 1.0 + cfg.t / mu;
    let radius = c * cfg.t.sqrt();
    let outside: Moments = cfg.run(|acc: &mut Moments, rng| {
        let (k, _) = sample_k(spec, cfg.t, rng)?;
        acc.push(if (k as f64 - centre).abs() > radius {
            1.0
        } else {
            0.0
        });
        Ok(())
    })?;
    Ok(outside.mean)
}

/// Outcome of driving two stopping rules with one uniform stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSummary {
    pub samples: u64,
    /// Paths on which the first rule stopped no later than the second.
    pub first_not_later: u64,
    pub mean_first: f64,
    pub mean_second: f64,
}

#[derive(Default)]
struct CouplingAcc {
    ok: u64,
    first: Moments,
    second: Moments,
}

impl Merge for CouplingAcc {
    fn merge_from(&mut self, other: Self) {
        self.ok += other.ok;
        self.first.merge(&other.first);
        self.second.merge(&other.second);
    }
}

/// Feeds each uniform draw to both `first` and `second` and records the two
/// stopping times per path.
pub fn coupled_stopping_times(
    first: &BijectionSpec,
    second: &BijectionSpec,
    cfg: SimConfig,
) -> Result<CouplingSummary> {
    let acc: CouplingAcc = cfg.run(|acc: &mut CouplingAcc, rng| {
        let (mut rem_a, mut rem_b) = (cfg.t, cfg.t);
        let (mut k_a, mut k_b) = (0u64, 0u64);
        let mut draws = 0u64;
        while rem_a >= 0.0 || rem_b >= 0.0 {
            if draws == ITERATION_CAP {
                return Err(Error::IterationCap { cap: ITERATION_CAP });
            }
            let x: f64 = rng.sample(OpenClosed01);
            draws += 1;
            if rem_a >= 0.0 {
                rem_a -= first.forward(x);
                k_a = draws;
            }
            if rem_b >= 0.0 {
                rem_b -= second.forward(x);
                k_b = draws;
            }
        }
        acc.ok += u64::from(k_a <= k_b);
        acc.first.push(k_a as f64);
        acc.second.push(k_b as f64);
        Ok(())
    })?;
    Ok(CouplingSummary {
        samples: cfg.samples,
        first_not_later: acc.ok,
        mean_first: acc.first.mean,
        mean_second: acc.second.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn threshold_zero_stops_after_one_draw() {
        let spec = BijectionSpec::LogProduct;
        let mut rng = substream(1, 0);
        for _ in 0..1000 {
            let (k, over) = sample_k(&spec, 0.0, &mut rng).unwrap();
            assert_eq!(k, 1);
            assert!(over > 0.0 && over <= 1.0);
        }
        let est = estimate_n(&BijectionSpec::Identity, SimConfig::new(0.0, 5000, 9)).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count, all.count);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.variance() - all.variance()).abs() < 1e-10);
    }

    #[test]
    fn reproducible_and_worker_dependent() {
        let spec = BijectionSpec::LogProduct;
        let cfg = SimConfig::new(1.5, 20_000, 7).workers(3);
        let a = estimate_n(&spec, cfg).unwrap();
        let b = estimate_n(&spec, cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let c = estimate_n(&spec, cfg.workers(5)).unwrap();
        assert_eq!(c.samples, a.samples);
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn substreams_differ() {
        let mut a = substream(42, 0);
        let mut b = substream(42, 1);
        let xa: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn invalid_configs_rejected() {
        let s = BijectionSpec::Identity;
        assert!(estimate_n(&s, SimConfig::new(-1.0, 10, 1)).is_err());
        assert!(estimate_n(&s, SimConfig::new(1.0, 0, 1)).is_err());
        assert!(estimate_n(&s, SimConfig::new(1.0, 10, 1).workers(0)).is_err());
        assert!(overshoot_histogram(&s, SimConfig::new(1.0, 10, 1), 5).is_err());
        assert!(k_concentration_check(&s, SimConfig::new(0.5, 10, 1), 1.0).is_err());
    }

    #[test]
    fn more_workers_than_samples() {
        let est = estimate_n(
            &BijectionSpec::Identity,
            SimConfig::new(1.0, 3, 1).workers(8),
        )
        .unwrap();
        assert_eq!(est.samples, 3);
        assert!(est.mean >= 2.0);
    }

    #[test]
    fn identity_at_one_is_near_e() {
        let est = estimate_n(&BijectionSpec::Identity, SimConfig::new(1.0, 400_000, 3)).unwrap();
        assert!(est.z_score(E) < 4.0, "{est:?}");
    }

    #[test]
    fn stopped_sum_at_zero_is_mean_increment() {
        let est = estimate_stopped_sum(&BijectionSpec::LogProduct, SimConfig::new(0.0, 400_000, 5))
            .unwrap();
        assert!(est.z_score(1.0 / (E - 1.0)) < 4.0, "{est:?}");
    }

    #[test]
    fn histogram_is_normalized_and_supported() {
        let h = overshoot_histogram(
            &BijectionSpec::Identity,
            SimConfig::new(3.0, 50_000, 11),
            20,
        )
        .unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(h.counts.iter().sum::<u64>(), 50_000);
        assert!(h.min_overshoot > 0.0 && h.max_overshoot <= 1.0);
        assert_eq!(h.bin_edges.len(), 21);
    }

    #[test]
    fn chernoff_examples() {
        let v = chernoff_bound(100.0, 0.5).unwrap();
        assert!((v - 2.0 * (-10.0f64).exp()).abs() < 1e-18);
        assert!((v - 9.0800e-5).abs() < 1e-8);
        assert_eq!(chernoff_bound(100.0, 0.1).unwrap(), 1.0);
        assert_eq!(chernoff_bound(3.0, 1e-9).unwrap(), 1.0);
        assert!(chernoff_bound(0.0, 0.5).is_err());
        assert!(chernoff_bound(1.0, -0.5).is_err());
    }

    #[test]
    fn concentration_with_huge_window_is_zero() {
        let f = k_concentration_check(
            &BijectionSpec::Identity,
            SimConfig::new(4.0, 10_000, 2),
            1e6,
        )
        .unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn coupling_dominates_path_by_path() {
        let s = coupled_stopping_times(
            &BijectionSpec::LogProduct,
            &BijectionSpec::Identity,
            SimConfig::new(3.0, 50_000, 8),
        )
        .unwrap();
        assert_eq!(s.first_not_later, s.samples);
        assert!(s.mean_first < s.mean_second);
    }

    #[test]
    fn json_shapes() {
        let est = estimate_n(&BijectionSpec::Identity, SimConfig::new(1.0, 100, 42)).unwrap();
        let v = est.to_json();
        for key in ["t", "spec", "samples", "seed", "mean", "std_error"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["mean"].is_f64());
        assert_eq!(v["spec"], "identity");
        let h = overshoot_histogram(&BijectionSpec::Identity, SimConfig::new(1.0, 100, 42), 10)
            .unwrap()
            .to_json();
        assert_eq!(h["bin_edges"].as_array().unwrap().len(), 11);
        assert_eq!(h["densities"].as_array().unwrap().len(), 10);
    }
}
