use super::RescaledCurve;
use crate::error::{Error, Result};
use crate::numfit::{dtft, hann, poly_eval, poly_fit, windowed_fft, Spectrum, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOptions {
    /// Peaks shallower than this are attributed to host structure.
    pub min_depth_nm: f64,
    pub pad: usize,
    pub min_peak_to_median: f64,
    /// Oscillation amplitude relative to the host level below which no layer
    /// is reported.
    pub min_relative_amplitude: f64,
    /// Difference-mode amplitude relative to the single-energy amplitude at
    /// the same depth below which the layer is considered non-resonant.
    pub min_resonant_fraction: f64,
    /// Oscillation periods the window must span.
    pub min_periods: f64,
    /// y is multiplied by Q^flatten_power before the transform so the host
    /// decay does not leak into deep bins.
    pub flatten_power: i32,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        Self {
            min_depth_nm: 5.0,
            pad: 8,
            min_peak_to_median: 3.0,
            min_relative_amplitude: 0.002,
            min_resonant_fraction: 0.1,
            min_periods: 3.0,
            flatten_power: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthEstimate {
    pub depth_nm: f64,
    /// ψ in y ≈ a·cos(Qd − ψ), referenced to Q = 0.
    pub phase_rad: f64,
    pub peak_to_median: f64,
    pub relative_amplitude: f64,
    pub spectrum: Spectrum,
}

fn detrend(q: &[f64], y: &[f64]) -> Vec<f64> {
    let c = poly_fit(q, y, 2);
    q.iter().zip(y).map(|(q, y)| y - poly_eval(&c, *q)).collect()
}

/// Phase ψ of the component cos(Qd − ψ) in `y` at depth `d`, after quadratic
/// detrending and Hann windowing.
pub fn phase_at(q: &[f64], y: &[f64], depth_nm: f64) -> f64 {
    let w = hann(q.len());
    let r: Vec<f64> = detrend(q, y).iter().zip(&w).map(|(a, b)| a * b).collect();
    -dtft(q, &r, depth_nm).arg()
}

fn flatten(q: &[f64], y: &[f64], power: i32) -> Vec<f64> {
    q.iter().zip(y).map(|(q, v)| v * q.powi(power)).collect()
}

/// Amplitude of the cos(Qd − ψ) component of Q^power·y, using the same
/// detrending and Hann weighting as the depth search.
pub fn oscillation_amplitude(q: &[f64], y: &[f64], depth_nm: f64, power: i32) -> f64 {
    let w = hann(q.len());
    let r: Vec<f64> = detrend(q, &flatten(q, y, power))
        .iter()
        .zip(&w)
        .map(|(a, b)| a * b)
        .collect();
    2.0 * dtft(q, &r, depth_nm).norm() / w.iter().sum::<f64>()
}

/// FFT depth and phase of `y`; `host` is the host signal on the same grid
/// whose mean flattened level the oscillation amplitude is compared against.
pub fn detect_depth(q: &[f64], y: &[f64], host: &[f64], opts: &DetectionOptions) -> Result<DepthEstimate> {
    let p = opts.flatten_power;
    let reference = flatten(q, host, p).iter().map(|v| v.abs()).sum::<f64>() / host.len() as f64;
    let r = detrend(q, &flatten(q, y, p));
    let spectrum = windowed_fft(q, &r, Window::Hann, opts.pad)?;
    let mag = spectrum.magnitudes();
    let deep: Vec<usize> = (1..mag.len() - 1)
        .filter(|&k| spectrum.depth_nm[k] > opts.min_depth_nm)
        .collect();
    let mut floor: Vec<f64> = deep.iter().map(|&k| mag[k]).collect();
    floor.sort_by(|a, b| a.total_cmp(b));
    let median = if floor.is_empty() {
        0.0
    } else if floor.len() % 2 == 1 {
        floor[floor.len() / 2]
    } else {
        0.5 * (floor[floor.len() / 2 - 1] + floor[floor.len() / 2])
    };
    let peak = deep
        .iter()
        .copied()
        .filter(|&k| mag[k] >= mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > 0.0)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]));
    let Some(k) = peak else {
        return Err(Error::NoLayerDetected {
            depth_nm: f64::NAN,
            peak_to_median: 0.0,
            relative_amplitude: 0.0,
        });
    };
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let depth_nm = spectrum.depth_nm[k] + offset * spectrum.bin_width_nm();
    let peak_to_median = if median > 0.0 { b / median } else { f64::INFINITY };
    let relative_amplitude = 2.0 * b / spectrum.window_sum / reference;
    if peak_to_median < opts.min_peak_to_median
        || !(relative_amplitude >= opts.min_relative_amplitude)
    {
        return Err(Error::NoLayerDetected {
            depth_nm,
            peak_to_median,
            relative_amplitude,
        });
    }
    let span = q[q.len() - 1] - q[0];
    let periods = span * depth_nm / (2.0 * std::f64::consts::PI);
    if periods < opts.min_periods {
        return Err(Error::Range(format!(
            "window spans {periods:.2} periods of the {depth_nm:.2} nm oscillation, need {}",
            opts.min_periods
        )));
    }
    let phase_rad = phase_at(q, y, depth_nm);
    Ok(DepthEstimate {
        depth_nm,
        phase_rad,
        peak_to_median,
        relative_amplitude,
        spectrum,
    })
}

/// Depth and phase of the dominant deep oscillation of a rescaled curve,
/// measured against the curve's own mean level.
pub fn fft_depth_phase(rc: &RescaledCurve, opts: &DetectionOptions) -> Result<DepthEstimate> {
    detect_depth(&rc.q, &rc.y, &rc.y, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::linspace;

    fn curve(y: impl Fn(f64) -> f64) -> RescaledCurve {
        let q = linspace(1.5, 5.0, 600);
        let y = q.iter().map(|&v| y(v)).collect();
        RescaledCurve {
            q,
            y,
            energy_ev: 1300.0,
            window: (1.5, 5.0),
        }
    }

    #[test]
    fn pure_cosine_depth() {
        for d0 in [12.0, 18.0, 33.3, 77.0] {
            let rc = curve(|q| (q * d0).cos());
            let est = fft_depth_phase(&rc, &DetectionOptions::default()).unwrap();
            assert!((est.depth_nm - d0).abs() < 0.05, "{d0}: {}", est.depth_nm);
        }
    }

    #[test]
    fn cosine_phase_is_recovered() {
        let psi = 0.7;
        let rc = curve(|q| 1.0 + 0.1 * (q * 18.0 - psi).cos());
        let est = fft_depth_phase(&rc, &DetectionOptions::default()).unwrap();
        assert!((est.phase_rad - psi).abs() < 0.05, "{}", est.phase_rad);
    }

    #[test]
    fn flat_curve_has_no_layer() {
        let rc = curve(|q| 1.0 + 0.01 * q);
        assert!(matches!(
            fft_depth_phase(&rc, &DetectionOptions::default()),
            Err(Error::NoLayerDetected { .. })
        ));
    }

    #[test]
    fn weak_oscillation_below_threshold() {
        let rc = curve(|q| 1.0 + 1e-3 * (q * 18.0).cos());
        assert!(matches!(
            fft_depth_phase(&rc, &DetectionOptions::default()),
            Err(Error::NoLayerDetected { .. })
        ));
    }
}
