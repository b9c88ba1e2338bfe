use crate::error::{Error, Result};

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson
/// slopes, non-centred three-point end slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Grid("interpolant needs >= 2 matching points".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("interpolant abscissae must increase".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                let (d0, d1) = (delta[i - 1], delta[i]);
                if d0 * d1 > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, slopes })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value at `at`, clamped to the domain.
    pub fn eval(&self, at: f64) -> f64 {
        let (lo, hi) = self.domain();
        let at = at.clamp(lo, hi);
        let n = self.x.len();
        let i = self.x.partition_point(|v| *v <= at).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let t = (at - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}
