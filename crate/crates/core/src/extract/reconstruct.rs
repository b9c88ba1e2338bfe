use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::linspace;

/// δ-layer SLD contrast recovered from the oscillating part of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedProfile {
    pub z_nm: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// 2π over the window span.
    pub resolution_nm: f64,
    pub window: (f64, f64),
    /// Depth of the largest |δρ̄| beyond `min_depth_nm`; `None` for a zero
    /// profile.
    pub peak_depth_nm: Option<f64>,
}

/// δρ̄(z) = (1/π)∫ I(Q)/(2√F²) e^(iQz) dQ over the window, trapezoidal rule.
///
/// The kernel uses absolute Q, so the phase is referenced to the surface.
pub fn reconstruct_profile(
    q: &[f64],
    signal: &[f64],
    normalizer: &[f64],
    z_max_nm: f64,
    dz_nm: f64,
    min_depth_nm: f64,
) -> Result<ReconstructedProfile> {
    if q.len() != signal.len() || q.len() != normalizer.len() || q.len() < 2 {
        return Err(Error::Grid("signal, normalizer and Q lengths differ".into()));
    }
    if let Some(v) = normalizer.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("normalizer must be > 0 on the window, got {v}")));
    }
    if !(z_max_nm > 0.0 && dz_nm > 0.0) {
        return Err(Error::Domain("depth grid must be positive".into()));
    }
    let s: Vec<f64> = signal
        .iter()
        .zip(normalizer)
        .map(|(v, n)| v / (2.0 * n.sqrt()))
        .collect();
    let weights: Vec<f64> = (0..q.len())
        .map(|i| {
            let left = if i > 0 { q[i] - q[i - 1] } else { 0.0 };
            let right = if i + 1 < q.len() { q[i + 1] - q[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let n = (z_max_nm / dz_nm).round() as usize + 1;
    let z_nm = linspace(0.0, z_max_nm, n);
    let values: Vec<Complex64> = z_nm
        .par_iter()
        .map(|&z| {
            q.iter()
                .zip(&s)
                .zip(&weights)
                .map(|((&qi, &si), &wi)| Complex64::from_polar(si * wi, qi * z))
                .sum::<Complex64>()
                / std::f64::consts::PI
        })
        .collect();
    let magnitude: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let peak_depth_nm = z_nm
        .iter()
        .zip(&magnitude)
        .filter(|(z, m)| **z >= min_depth_nm && **m > 0.0)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(z, _)| *z);
    let window = (q[0], q[q.len() - 1]);
    Ok(ReconstructedProfile {
        re: values.iter().map(|v| v.re).collect(),
        im: values.iter().map(|v| v.im).collect(),
        magnitude,
        z_nm,
        resolution_nm: 2.0 * std::f64::consts::PI / (window.1 - window.0),
        window,
        peak_depth_nm,
    })
}
