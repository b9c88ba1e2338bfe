//! Inversion pipelines: from reflectivity curves to δ-layer depth, thickness
//! and profile.

mod detect;
mod envelope;
mod pipeline;
mod reconstruct;
mod resonance;
mod split;

pub use detect::{
    detect_depth, fft_depth_phase, oscillation_amplitude, phase_at, DepthEstimate,
    DetectionOptions,
};
pub use envelope::{
    fit_envelope, envelope_value, EnvelopeModel, Estimate, ExtractionResult, Method,
};
pub use pipeline::{
    analyze_difference, analyze_single_energy, predicted_phase_shift, resonant_difference,
    wrap_phase,
    AnalysisOptions, DifferenceAnalysis, PhaseReport, SingleEnergyAnalysis,
};
pub use reconstruct::{reconstruct_profile, ReconstructedProfile};
pub use resonance::{
    contrast, resonance_sweep, thickness_from_resonance, ContrastDefinition, ResonanceSetup,
    ThicknessEstimate,
};
pub use split::{low_pass, split_frequencies, split_with, SpectralDecomposition, SplitOptions};

use crate::error::{Error, Result};
use crate::forward::ReflectivityCurve;
use crate::numfit::resample_uniform;

/// Q window used when none is configured, nm⁻¹.
pub const DEFAULT_WINDOW: (f64, f64) = (1.5, 5.0);

/// Cutoff depth separating host structure from the δ-layer signal, nm.
pub const DEFAULT_CUTOFF_NM: f64 = 10.0;

pub const MIN_GRID_POINTS: usize = 64;

/// Reflectivity divided by the Fresnel-like prefactor, on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledCurve {
    pub q: Vec<f64>,
    /// Q²R/(4π)².
    pub y: Vec<f64>,
    pub energy_ev: f64,
    pub window: (f64, f64),
}

impl RescaledCurve {
    pub fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    pub fn span(&self) -> f64 {
        self.window.1 - self.window.0
    }
}

/// Twice the number of raw samples inside `window`, at least 64.
pub fn default_points(curve: &ReflectivityCurve, window: (f64, f64)) -> usize {
    let inside = curve
        .q
        .iter()
        .filter(|q| **q >= window.0 && **q <= window.1)
        .count();
    (2 * inside).max(MIN_GRID_POINTS)
}

/// Resamples `curve` onto a uniform grid over `window` and forms Q²R/(4π)².
pub fn rescale(
    curve: &ReflectivityCurve,
    window: (f64, f64),
    points: Option<usize>,
) -> Result<RescaledCurve> {
    let n = points.unwrap_or_else(|| default_points(curve, window));
    if n < MIN_GRID_POINTS {
        return Err(Error::Grid(format!(
            "need at least {MIN_GRID_POINTS} grid points, got {n}"
        )));
    }
    let (q, r) = resample_uniform(&curve.q, &curve.r, window.0, window.1, n)?;
    let four_pi2 = (4.0 * std::f64::consts::PI).powi(2);
    let y = q.iter().zip(&r).map(|(q, r)| q * q * r / four_pi2).collect();
    Ok(RescaledCurve {
        q,
        y,
        energy_ev: curve.energy_ev,
        window,
    })
}
