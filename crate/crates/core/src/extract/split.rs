use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::RescaledCurve;
use crate::error::{Error, Result};
use crate::numfit::{check_uniform, fft, ifft, poly_eval, poly_fit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Width of the raised-cosine transition as a fraction of the cutoff.
    pub taper_fraction: f64,
    /// y is multiplied by Q^flatten_power before filtering to remove the
    /// steep host decay.
    pub flatten_power: i32,
    pub trend_degree: usize,
    /// Passes that fit and remove the δ-layer oscillation before filtering.
    pub refine_iterations: usize,
    /// Polynomial degree of the oscillation envelope used in refinement.
    pub refine_degree: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            taper_fraction: 0.1,
            flatten_power: 2,
            trend_degree: 2,
            refine_iterations: 2,
            refine_degree: 3,
        }
    }
}

/// Low- and high-frequency parts of a rescaled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub q: Vec<f64>,
    /// Estimate of |F|² from depths below the cutoff.
    pub low: Vec<f64>,
    /// Interference estimate y − low.
    pub interference: Vec<f64>,
    pub cutoff_nm: f64,
}

/// Keeps the components of `y` from depths below `cutoff_nm`.
///
/// The flattened, detrended signal is extended by point reflection about
/// both ends, which avoids value and slope jumps, and filtered in the FFT domain with a brick-wall response softened by a
/// raised-cosine transition.
pub fn low_pass(q: &[f64], y: &[f64], cutoff_nm: f64, opts: &SplitOptions) -> Result<Vec<f64>> {
    if !(cutoff_nm > 0.0) {
        return Err(Error::Domain(format!("cutoff must be > 0, got {cutoff_nm}")));
    }
    let dq = check_uniform(q, 1e-6)?;
    let n = q.len();
    let flat: Vec<f64> = q
        .iter()
        .zip(y)
        .map(|(q, y)| y * q.powi(opts.flatten_power))
        .collect();
    let trend_c = poly_fit(q, &flat, opts.trend_degree);
    let trend: Vec<f64> = q.iter().map(|q| poly_eval(&trend_c, *q)).collect();
    let resid: Vec<f64> = flat.iter().zip(&trend).map(|(f, t)| f - t).collect();
    // point reflection about both ends keeps value and slope continuous
    let (first, last) = (resid[0], resid[n - 1]);
    let mut ext: Vec<Complex64> = Vec::with_capacity(3 * n - 2);
    ext.extend((1..n).rev().map(|k| Complex64::new(2.0 * first - resid[k], 0.0)));
    ext.extend(resid.iter().map(|v| Complex64::new(*v, 0.0)));
    ext.extend((1..n).map(|k| Complex64::new(2.0 * last - resid[n - 1 - k], 0.0)));
    let m = ext.len();
    let mut spec = fft(&ext);
    let w0 = cutoff_nm * (1.0 - 0.5 * opts.taper_fraction);
    let w1 = cutoff_nm * (1.0 + 0.5 * opts.taper_fraction);
    for (k, v) in spec.iter_mut().enumerate() {
        let bin = k.min(m - k) as f64;
        let depth = 2.0 * std::f64::consts::PI * bin / (m as f64 * dq);
        let gain = if depth <= w0 {
            1.0
        } else if depth >= w1 {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (depth - w0) / (w1 - w0)).cos())
        };
        *v *= gain;
    }
    let back = ifft(&spec);
    Ok((0..n)
        .map(|i| (back[n - 1 + i].re + trend[i]) / q[i].powi(opts.flatten_power))
        .collect())
}

/// Least-squares fit of Σ_k x^k (a_k cos Qd + b_k sin Qd) with x the window
/// coordinate scaled to [−1, 1].
fn fit_oscillation(q: &[f64], y: &[f64], depth_nm: f64, degree: usize) -> Vec<f64> {
    let n = q.len();
    let (lo, hi) = (q[0], q[n - 1]);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let m = DMatrix::from_fn(n, 2 * (degree + 1), |i, j| {
        let x = (q[i] - mid) / half;
        let p = x.powi((j / 2) as i32);
        if j % 2 == 0 {
            p * (q[i] * depth_nm).cos()
        } else {
            p * (q[i] * depth_nm).sin()
        }
    });
    let c = m
        .clone()
        .svd(true, true)
        .solve(&DVector::from_column_slice(y), 1e-12)
        .expect("svd with both factors computed");
    (m * c).as_slice().to_vec()
}

/// Low/high split without the positivity requirement on the low part.
pub(crate) fn separate(
    q: &[f64],
    y: &[f64],
    cutoff_nm: f64,
    depth_hint: Option<f64>,
    opts: &SplitOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut low = low_pass(q, y, cutoff_nm, opts)?;
    let mut high: Vec<f64> = y.iter().zip(&low).map(|(a, b)| a - b).collect();
    if let Some(d) = depth_hint {
        for _ in 0..opts.refine_iterations {
            let osc = fit_oscillation(q, &high, d, opts.refine_degree);
            let cleaned: Vec<f64> = y.iter().zip(&osc).map(|(a, b)| a - b).collect();
            low = low_pass(q, &cleaned, cutoff_nm, opts)?;
            high = y.iter().zip(&low).map(|(a, b)| a - b).collect();
        }
    }
    Ok((low, high))
}

/// Splits y into |F|² (depths below `cutoff_nm`) and the interference term.
///
/// With a depth estimate the oscillation at that depth is fitted and removed
/// before filtering, which keeps it from leaking into the low-frequency part.
pub fn split_frequencies(
    rc: &RescaledCurve,
    cutoff_nm: f64,
    depth_hint: Option<f64>,
) -> Result<SpectralDecomposition> {
    split_with(rc, cutoff_nm, depth_hint, &SplitOptions::default())
}

pub fn split_with(
    rc: &RescaledCurve,
    cutoff_nm: f64,
    depth_hint: Option<f64>,
    opts: &SplitOptions,
) -> Result<SpectralDecomposition> {
    if let Some(d) = depth_hint {
        if cutoff_nm >= d {
            return Err(Error::InvalidCutoff {
                cutoff_nm,
                depth_nm: d,
            });
        }
    }
    let (low, interference) = separate(&rc.q, &rc.y, cutoff_nm, depth_hint, opts)?;
    if let Some((q, v)) = rc.q.iter().zip(&low).find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!(
            "low-frequency estimate is not positive ({v:e}) at Q = {q}"
        )));
    }
    Ok(SpectralDecomposition {
        q: rc.q.clone(),
        low,
        interference,
        cutoff_nm,
    })
}
