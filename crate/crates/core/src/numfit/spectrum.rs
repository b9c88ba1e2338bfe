use num_complex::Complex64;
use rustfft::FftPlanner;

use super::resample::check_uniform;
use crate::error::{Error, Result};

/// Forward DFT, unnormalised: Y_k = Σ y_n e^(−2πikn/N).
pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT with the 1/N factor, so `ifft(fft(y)) == y`.
pub fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Σ y_n e^(−i·z·q_n) evaluated directly at one depth.
pub fn dtft(q: &[f64], y: &[f64], z: f64) -> Complex64 {
    q.iter()
        .zip(y)
        .map(|(&qn, &yn)| Complex64::from_polar(yn, -z * qn))
        .sum()
}

/// Symmetric Hann window of length n.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => hann(n),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// One-sided spectrum of a real signal on a uniform Q grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Depth of each bin, 2π·k/(N_pad·ΔQ), nm.
    pub depth_nm: Vec<f64>,
    /// Σ w_n y_n e^(−i z_k q_n): phases are referenced to Q = 0.
    pub values: Vec<Complex64>,
    pub n_input: usize,
    pub n_padded: usize,
    /// Σ w_n, for converting bin magnitudes to amplitudes.
    pub window_sum: f64,
}

impl Spectrum {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn bin_width_nm(&self) -> f64 {
        self.depth_nm.get(1).copied().unwrap_or(0.0)
    }
}

/// Windowed, zero-padded FFT with a physical depth axis.
pub fn windowed_fft(q: &[f64], y: &[f64], window: Window, pad: usize) -> Result<Spectrum> {
    if q.len() != y.len() {
        return Err(Error::Grid("Q and signal lengths differ".into()));
    }
    if pad < 8 {
        return Err(Error::Domain(format!("zero-padding factor must be >= 8, got {pad}")));
    }
    let dq = check_uniform(q, 1e-6)?;
    let n = q.len();
    let w = window.weights(n);
    let n_padded = n * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_padded];
    for i in 0..n {
        buf[i] = Complex64::new(y[i] * w[i], 0.0);
    }
    let full = fft(&buf);
    let half = n_padded / 2 + 1;
    let two_pi = 2.0 * std::f64::consts::PI;
    let depth_nm: Vec<f64> = (0..half).map(|k| two_pi * k as f64 / (n_padded as f64 * dq)).collect();
    let values = full[..half]
        .iter()
        .zip(&depth_nm)
        .map(|(v, &z)| v * Complex64::from_polar(1.0, -z * q[0]))
        .collect();
    Ok(Spectrum {
        depth_nm,
        values,
        n_input: n,
        n_padded,
        window_sum: w.iter().sum(),
    })
}
