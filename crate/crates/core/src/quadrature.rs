//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Panels are kept in a max-heap keyed by their error estimate; the worst
//! panel is bisected until the summed estimate drops below the requested
//! absolute tolerance. Callers that know where the integrand has kinks or
//! jumps pass them as breakpoints so that no panel straddles one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance for parameter integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Default cap on the number of live panels.
pub const DEFAULT_MAX_PANELS: usize = 4000;

// Kronrod abscissae on [-1, 1]; odd indices are the 7-point Gauss nodes.
// Tables keep the published digits.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = g(center - dx) + g(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive quadrature settings.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: DEFAULT_ABS_TOL,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            ..Default::default()
        }
    }

    /// Integrates `g` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_with_breaks(g, a, b, &[])
    }

    /// Integrates `g` over `[a, b]`, starting from panels split at `breaks`.
    /// Breakpoints outside `(a, b)` are ignored.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        g: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::Precondition(format!(
                "integration bounds must satisfy a <= b, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }

        let mut cuts: Vec<f64> = std::iter::once(a)
            .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
            .chain(std::iter::once(b))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut heap: BinaryHeap<Panel> =
            cuts.windows(2).map(|w| kronrod15(&g, w[0], w[1])).collect();
        let mut total_error: f64 = heap.iter().map(|p| p.error).sum();

        while total_error > self.abs_tol {
            if heap.len() >= self.max_panels {
                return Err(Error::Nonconvergence {
                    a,
                    b,
                    estimate: total_error,
                    tol: self.abs_tol,
                    panels: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap holds at least one panel");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Panel is at machine resolution; its estimate is pure roundoff.
                heap.push(Panel {
                    error: 0.0,
                    ..worst
                });
                total_error -= worst.error;
                continue;
            }
            let left = kronrod15(&g, worst.a, mid);
            let right = kronrod15(&g, mid, worst.b);
            total_error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);

            // The running total drifts under repeated add/subtract.
            if total_error <= self.abs_tol {
                total_error = heap.iter().map(|p| p.error).sum();
            }
        }

        let mut panels = heap.into_vec();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        Ok(neumaier_sum(panels.iter().map(|p| p.value)))
    }
}

/// Integrates `g` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    Quadrature::with_tol(abs_tol).integrate(g, a, b)
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
