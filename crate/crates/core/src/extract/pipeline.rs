use super::detect::{
    detect_depth, fft_depth_phase, oscillation_amplitude, phase_at, DepthEstimate,
    DetectionOptions,
};
use super::envelope::{fit_envelope, ExtractionResult, Method};
use super::reconstruct::{reconstruct_profile, ReconstructedProfile};
use super::split::{separate, split_with, SpectralDecomposition, SplitOptions};
use super::{default_points, rescale, RescaledCurve, DEFAULT_CUTOFF_NM, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::forward::ReflectivityCurve;
use crate::xsf::TableSet;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub window: (f64, f64),
    /// Uniform grid size; default is twice the raw points in the window.
    pub points: Option<usize>,
    /// Fixed cutoff depth; by default min(10 nm, d/2) from the FFT depth.
    pub cutoff_nm: Option<f64>,
    pub detection: DetectionOptions,
    pub split: SplitOptions,
    pub profile_z_max_nm: f64,
    pub profile_dz_nm: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            points: None,
            cutoff_nm: None,
            detection: DetectionOptions::default(),
            split: SplitOptions::default(),
            profile_z_max_nm: 100.0,
            profile_dz_nm: 0.05,
        }
    }
}

impl AnalysisOptions {
    fn cutoff_for(&self, depth_nm: f64) -> Result<f64> {
        match self.cutoff_nm {
            Some(c) if c >= depth_nm => Err(Error::InvalidCutoff {
                cutoff_nm: c,
                depth_nm,
            }),
            Some(c) => Ok(c),
            None => Ok(DEFAULT_CUTOFF_NM.min(0.5 * depth_nm)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleEnergyAnalysis {
    pub rescaled: RescaledCurve,
    pub depth: DepthEstimate,
    pub decomposition: SpectralDecomposition,
    /// |F_host|² estimate: the low-frequency part less the layer's own |w·H|².
    pub normalizer: Vec<f64>,
    pub result: ExtractionResult,
    pub profile: ReconstructedProfile,
}

/// Rescale, locate the layer by FFT, split off |F|², fit the envelope and
/// reconstruct δρ̄.
pub fn analyze_single_energy(
    curve: &ReflectivityCurve,
    opts: &AnalysisOptions,
) -> Result<SingleEnergyAnalysis> {
    let rescaled = rescale(curve, opts.window, opts.points)?;
    let depth = fft_depth_phase(&rescaled, &opts.detection)?;
    let cutoff = opts.cutoff_for(depth.depth_nm)?;
    let decomposition = split_with(&rescaled, cutoff, Some(depth.depth_nm), &opts.split)?;
    let (result, normalizer) = fit_corrected(
        &rescaled.q,
        &decomposition.interference,
        &decomposition.low,
        Method::SingleEnergy,
        depth.depth_nm,
    )?;
    let profile = reconstruct_profile(
        &rescaled.q,
        &decomposition.interference,
        &normalizer,
        opts.profile_z_max_nm,
        opts.profile_dz_nm,
        opts.detection.min_depth_nm,
    )?;
    Ok(SingleEnergyAnalysis {
        rescaled,
        depth,
        decomposition,
        normalizer,
        result,
        profile,
    })
}

/// The low-frequency part holds |F_host|² plus the layer's own |w·H(Q)|²,
/// which grows relative to the host with Q and mimics envelope damping.
/// With |w| ≈ A/2 from a first fit it is subtracted before refitting.
fn without_self_term(q: &[f64], low: &[f64], fit: &ExtractionResult) -> Vec<f64> {
    let w2 = (0.5 * fit.amplitude.value).powi(2);
    let sigma = fit.sigma_nm.value;
    let corrected: Vec<f64> = q
        .iter()
        .zip(low)
        .map(|(q, l)| l - w2 * (-(q * sigma).powi(2)).exp())
        .collect();
    if corrected.iter().all(|v| *v > 0.0) {
        corrected
    } else {
        low.to_vec()
    }
}

fn fit_corrected(
    q: &[f64],
    signal: &[f64],
    low: &[f64],
    method: Method,
    depth_nm: f64,
) -> Result<(ExtractionResult, Vec<f64>)> {
    let first = fit_envelope(q, signal, low, method, depth_nm)?;
    let normalizer = without_self_term(q, low, &first);
    let result = fit_envelope(q, signal, &normalizer, method, first.depth_nm.value)?;
    Ok((result, normalizer))
}

/// Oscillation phases of the two single-energy curves at a common depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub depth_nm: f64,
    pub phase_below_rad: f64,
    pub phase_above_rad: f64,
    /// Phase above minus phase below, wrapped to (−π, π].
    pub measured_shift_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceAnalysis {
    pub q: Vec<f64>,
    /// (R_above − R_below)·Q²/(4π)².
    pub difference: Vec<f64>,
    /// High-pass part of the difference that is fitted.
    pub interference: Vec<f64>,
    /// Mean low-frequency |F|² estimate of the two curves.
    pub normalizer: Vec<f64>,
    pub cutoff_nm: f64,
    pub depth: DepthEstimate,
    /// Difference amplitude at the layer depth over the larger single-energy amplitude.
    pub resonant_fraction: f64,
    pub result: ExtractionResult,
    pub profile: ReconstructedProfile,
    pub phases: PhaseReport,
    pub energy_below_ev: f64,
    pub energy_above_ev: f64,
}

/// Wraps an angle into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = x.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// arg Δf(above) − arg Δf(below), wrapped to (−π, π].
pub fn predicted_phase_shift(
    tables: &TableSet,
    dopant: &str,
    host: &str,
    energy_below_ev: f64,
    energy_above_ev: f64,
) -> Result<f64> {
    let below = tables.delta_f(dopant, host, energy_below_ev)?;
    let above = tables.delta_f(dopant, host, energy_above_ev)?;
    Ok(wrap_phase(above.arg() - below.arg()))
}

/// Resonant-contrast pipeline on curves measured below and above the edge.
pub fn analyze_difference(
    below: &ReflectivityCurve,
    above: &ReflectivityCurve,
    opts: &AnalysisOptions,
) -> Result<DifferenceAnalysis> {
    let points = opts
        .points
        .unwrap_or_else(|| default_points(below, opts.window).max(default_points(above, opts.window)));
    let rb = rescale(below, opts.window, Some(points))?;
    let ra = rescale(above, opts.window, Some(points))?;
    let difference = resonant_difference_rescaled(&ra, &rb)?;
    let q = rb.q.clone();
    let host: Vec<f64> = rb.y.iter().zip(&ra.y).map(|(a, b)| 0.5 * (a + b)).collect();
    let depth = detect_depth(&q, &difference, &host, &opts.detection)?;
    let d = depth.depth_nm;
    let p = opts.detection.flatten_power;
    let single = oscillation_amplitude(&q, &rb.y, d, p).max(oscillation_amplitude(&q, &ra.y, d, p));
    let resonant_fraction = oscillation_amplitude(&q, &difference, d, p) / single;
    if !(resonant_fraction >= opts.detection.min_resonant_fraction) {
        return Err(Error::NoResonantSignal {
            depth_nm: d,
            resonant_fraction,
        });
    }
    let cutoff_nm = opts.cutoff_for(d)?;
    let sb = split_with(&rb, cutoff_nm, Some(d), &opts.split)?;
    let sa = split_with(&ra, cutoff_nm, Some(d), &opts.split)?;
    let host_estimate = |split: &SpectralDecomposition| match fit_envelope(
        &q,
        &split.interference,
        &split.low,
        Method::SingleEnergy,
        d,
    ) {
        Ok(fit) => without_self_term(&q, &split.low, &fit),
        Err(_) => split.low.clone(),
    };
    let normalizer: Vec<f64> = host_estimate(&sb)
        .iter()
        .zip(&host_estimate(&sa))
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let (_, interference) = separate(&q, &difference, cutoff_nm, Some(d), &opts.split)?;
    let result = fit_envelope(&q, &interference, &normalizer, Method::ResonantDifference, d)?;
    let profile = reconstruct_profile(
        &q,
        &interference,
        &normalizer,
        opts.profile_z_max_nm,
        opts.profile_dz_nm,
        opts.detection.min_depth_nm,
    )?;
    let phase_below_rad = phase_at(&q, &rb.y, d);
    let phase_above_rad = phase_at(&q, &ra.y, d);
    Ok(DifferenceAnalysis {
        difference,
        interference,
        normalizer,
        cutoff_nm,
        depth,
        resonant_fraction,
        result,
        profile,
        phases: PhaseReport {
            depth_nm: d,
            phase_below_rad,
            phase_above_rad,
            measured_shift_rad: wrap_phase(phase_above_rad - phase_below_rad),
        },
        energy_below_ev: below.energy_ev,
        energy_above_ev: above.energy_ev,
        q,
    })
}

/// Pointwise difference of two rescaled curves on an identical grid.
pub(crate) fn resonant_difference_rescaled(
    above: &RescaledCurve,
    below: &RescaledCurve,
) -> Result<Vec<f64>> {
    let aligned = above.q.len() == below.q.len()
        && above
            .q
            .iter()
            .zip(&below.q)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !aligned {
        return Err(Error::Alignment(format!(
            "grids differ: {} points on [{}, {}] vs {} points on [{}, {}]",
            above.q.len(),
            above.window.0,
            above.window.1,
            below.q.len(),
            below.window.0,
            below.window.1
        )));
    }
    Ok(above.y.iter().zip(&below.y).map(|(a, b)| a - b).collect())
}

/// (R_above − R_below)·Q²/(4π)² on a shared uniform grid over `window`.
pub fn resonant_difference(
    above: &ReflectivityCurve,
    below: &ReflectivityCurve,
    window: (f64, f64),
    points: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let wrap = |e: Error| match e {
        Error::Range(m) => Error::Alignment(m),
        other => other,
    };
    let ra = rescale(above, window, Some(points)).map_err(wrap)?;
    let rb = rescale(below, window, Some(points)).map_err(wrap)?;
    let d = resonant_difference_rescaled(&ra, &rb)?;
    Ok((ra.q, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::linspace;

    #[test]
    fn identical_curves_cancel() {
        let q = linspace(0.5, 6.0, 300);
        let r = q.iter().map(|q| 1e-4 / q.powi(4)).collect();
        let c = ReflectivityCurve::new(q, r, 1300.0).unwrap();
        let (_, d) = resonant_difference(&c, &c, DEFAULT_WINDOW, 400).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn misaligned_grids() {
        let q = linspace(0.5, 6.0, 300);
        let r: Vec<f64> = q.iter().map(|q| 1e-4 / q.powi(4)).collect();
        let c = ReflectivityCurve::new(q, r, 1300.0).unwrap();
        let a = rescale(&c, (1.5, 5.0), Some(100)).unwrap();
        let b = rescale(&c, (1.5, 4.5), Some(100)).unwrap();
        assert!(matches!(
            resonant_difference_rescaled(&a, &b),
            Err(Error::Alignment(_))
        ));
        let short = ReflectivityCurve::new(linspace(0.5, 4.0, 100), vec![1e-6; 100], 1335.0).unwrap();
        assert!(matches!(
            resonant_difference(&short, &c, DEFAULT_WINDOW, 100),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn phase_wrapping() {
        let pi = std::f64::consts::PI;
        assert!((wrap_phase(1.5 * pi) + 0.5 * pi).abs() < 1e-12);
        assert!((wrap_phase(-1.5 * pi) - 0.5 * pi).abs() < 1e-12);
        assert!((wrap_phase(pi) - pi).abs() < 1e-12);
    }
}
