//! Monotone piecewise-cubic Hermite interpolation on a uniform grid.

/// Shape-preserving cubic through `(x0 + j·h, y_j)`.
///
/// Node slopes use the harmonic mean of neighbouring secants (zero at local
/// extrema), which keeps the interpolant monotone wherever the data are.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x0: f64,
    h: f64,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Needs at least two values and `h > 0`.
    pub fn new(x0: f64, h: f64, ys: Vec<f64>) -> Self {
        assert!(ys.len() >= 2, "monotone cubic needs at least two nodes");
        assert!(h > 0.0, "grid spacing must be positive");
        let secants: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let n = ys.len();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b > 0.0 {
                2.0 * a * b / (a + b)
            } else {
                0.0
            };
        }
        MonotoneCubic { x0, h, ys, slopes }
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.ys.len() - 1) as f64 * self.h
    }

    /// Evaluates at `x`, clamping to the grid's extent.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.ys.len() - 1;
        let pos = ((x - self.x0) / self.h).max(0.0);
        let cell = (pos.floor() as usize).min(last - 1);
        let s = (pos - cell as f64).clamp(0.0, 1.0);
        let (y0, y1) = (self.ys[cell], self.ys[cell + 1]);
        let (d0, d1) = (self.slopes[cell] * self.h, self.slopes[cell + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
    }
}
