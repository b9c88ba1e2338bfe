//! Result records written by the analysis commands.

use std::fmt::Write as _;

use rcxr_core::extract::{
    DepthEstimate, DifferenceAnalysis, Estimate, ExtractionResult, ReconstructedProfile,
    SingleEnergyAnalysis, ThicknessEstimate,
};
use rcxr_core::numfit::IntervalKind;
use serde::Serialize;

use crate::config::ThicknessConvention;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl From<&Estimate> for EstimateRecord {
    fn from(e: &Estimate) -> Self {
        Self {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
        }
    }
}

pub fn interval_tag(kind: IntervalKind) -> &'static str {
    match kind {
        IntervalKind::TwoSided => "two-sided",
        IntervalKind::UpperBoundOnly => "upper-bound-only",
        IntervalKind::OpenAbove => "open-above",
        IntervalKind::Unconstrained => "unconstrained",
        IntervalKind::CovarianceFallback => "covariance-fallback",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub method: String,
    pub window_q_per_nm: [f64; 2],
    pub thickness_convention: String,
    pub thickness_interval: String,
    pub converged: bool,
    pub iterations: usize,
    pub residual_rms: f64,
    pub depth_nm: EstimateRecord,
    /// FWHM or σ, per `thickness_convention`.
    pub thickness_nm: EstimateRecord,
    pub fwhm_nm: EstimateRecord,
    pub sigma_nm: EstimateRecord,
    pub amplitude: EstimateRecord,
    pub phase_rad: EstimateRecord,
}

impl FitRecord {
    pub fn new(r: &ExtractionResult, convention: ThicknessConvention) -> Self {
        let thickness = match convention {
            ThicknessConvention::Fwhm => &r.fwhm_nm,
            ThicknessConvention::Sigma => &r.sigma_nm,
        };
        Self {
            method: r.method.tag().into(),
            window_q_per_nm: [r.window.0, r.window.1],
            thickness_convention: convention.tag().into(),
            thickness_interval: interval_tag(r.thickness_interval).into(),
            converged: r.converged,
            iterations: r.iterations,
            residual_rms: r.residual_rms,
            depth_nm: (&r.depth_nm).into(),
            thickness_nm: thickness.into(),
            fwhm_nm: (&r.fwhm_nm).into(),
            sigma_nm: (&r.sigma_nm).into(),
            amplitude: (&r.amplitude).into(),
            phase_rad: (&r.phase_rad).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub depth_nm: f64,
    pub phase_rad: f64,
    pub peak_to_median: f64,
    pub relative_amplitude: f64,
    pub cutoff_nm: f64,
}

impl DetectionRecord {
    pub fn new(d: &DepthEstimate, cutoff_nm: f64) -> Self {
        Self {
            depth_nm: d.depth_nm,
            phase_rad: d.phase_rad,
            peak_to_median: d.peak_to_median,
            relative_amplitude: d.relative_amplitude,
            cutoff_nm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRecord {
    pub file: String,
    pub resolution_nm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_depth_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleEnergyReport {
    pub manifest: String,
    pub input: String,
    pub energy_ev: f64,
    pub warnings: Vec<String>,
    pub fit: FitRecord,
    pub detection: DetectionRecord,
    pub profile: ProfileRecord,
}

impl SingleEnergyReport {
    pub fn new(
        a: &SingleEnergyAnalysis,
        convention: ThicknessConvention,
        manifest: String,
        input: String,
        profile_file: String,
        warnings: Vec<String>,
    ) -> Self {
        Self {
            manifest,
            input,
            energy_ev: a.rescaled.energy_ev,
            warnings,
            fit: FitRecord::new(&a.result, convention),
            detection: DetectionRecord::new(&a.depth, a.decomposition.cutoff_nm),
            profile: ProfileRecord {
                file: profile_file,
                resolution_nm: a.profile.resolution_nm,
                peak_depth_nm: a.profile.peak_depth_nm,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub depth_nm: f64,
    pub phase_below_rad: f64,
    pub phase_above_rad: f64,
    pub measured_shift_rad: f64,
    pub predicted_shift_rad: f64,
    pub measured_shift_pi: f64,
    pub predicted_shift_pi: f64,
    /// Measured minus predicted, wrapped to (−π, π].
    pub discrepancy_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceReport {
    pub manifest: String,
    pub inputs: [String; 2],
    pub energy_below_ev: f64,
    pub energy_above_ev: f64,
    pub edge_ev: f64,
    pub resonant_fraction: f64,
    pub warnings: Vec<String>,
    pub fit: FitRecord,
    pub detection: DetectionRecord,
    pub phase: PhaseRecord,
    pub profile: ProfileRecord,
}

impl DifferenceReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: &DifferenceAnalysis,
        convention: ThicknessConvention,
        predicted_shift_rad: f64,
        edge_ev: f64,
        manifest: String,
        inputs: [String; 2],
        profile_file: String,
        warnings: Vec<String>,
    ) -> Self {
        let pi = std::f64::consts::PI;
        let p = &a.phases;
        Self {
            manifest,
            inputs,
            energy_below_ev: a.energy_below_ev,
            energy_above_ev: a.energy_above_ev,
            edge_ev,
            resonant_fraction: a.resonant_fraction,
            warnings,
            fit: FitRecord::new(&a.result, convention),
            detection: DetectionRecord::new(&a.depth, a.cutoff_nm),
            phase: PhaseRecord {
                depth_nm: p.depth_nm,
                phase_below_rad: p.phase_below_rad,
                phase_above_rad: p.phase_above_rad,
                measured_shift_rad: p.measured_shift_rad,
                predicted_shift_rad,
                measured_shift_pi: p.measured_shift_rad / pi,
                predicted_shift_pi: predicted_shift_rad / pi,
                discrepancy_rad: rcxr_core::extract::wrap_phase(
                    p.measured_shift_rad - predicted_shift_rad,
                ),
            },
            profile: ProfileRecord {
                file: profile_file,
                resolution_nm: a.profile.resolution_nm,
                peak_depth_nm: a.profile.peak_depth_nm,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub fwhm_nm: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceReport {
    pub manifest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub contrast_definition: String,
    pub theta_deg: f64,
    pub n2d_per_nm2: f64,
    pub depth_nm: f64,
    pub measured_contrast: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_contrast_sigma: Option<f64>,
    pub thickness_convention: String,
    pub thickness_nm: EstimateRecord,
    pub simulated_band: [f64; 2],
    pub sweep: Vec<SweepPoint>,
}

impl ResonanceReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t: &ThicknessEstimate,
        contrast_definition: &str,
        theta_deg: f64,
        n2d_per_nm2: f64,
        depth_nm: f64,
        manifest: String,
        input: Option<String>,
    ) -> Self {
        Self {
            manifest,
            input,
            contrast_definition: contrast_definition.into(),
            theta_deg,
            n2d_per_nm2,
            depth_nm,
            measured_contrast: t.measured,
            measured_contrast_sigma: t.measured_sigma,
            thickness_convention: "fwhm".into(),
            thickness_nm: EstimateRecord {
                value: t.thickness_nm,
                lower: t.lower_nm,
                upper: t.upper_nm,
            },
            simulated_band: [t.band.0, t.band.1],
            sweep: t
                .sweep
                .iter()
                .map(|(f, c)| SweepPoint {
                    fwhm_nm: *f,
                    contrast: *c,
                })
                .collect(),
        }
    }
}

/// Plot-ready columns of δρ̄(z).
pub fn format_profile(p: &ReconstructedProfile, manifest: &str) -> String {
    let mut out = String::from("# rcxr reconstructed profile\n");
    let _ = writeln!(out, "# manifest = {manifest}");
    let _ = writeln!(out, "# resolution_nm = {}", p.resolution_nm);
    let _ = writeln!(out, "# window_q_per_nm = {} {}", p.window.0, p.window.1);
    if let Some(d) = p.peak_depth_nm {
        let _ = writeln!(out, "# peak_depth_nm = {d}");
    }
    let _ = writeln!(out, "# columns = z_nm re im magnitude");
    for i in 0..p.z_nm.len() {
        let _ = writeln!(
            out,
            "{} {:e} {:e} {:e}",
            p.z_nm[i], p.re[i], p.im[i], p.magnitude[i]
        );
    }
    out
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("report serializes")
}
