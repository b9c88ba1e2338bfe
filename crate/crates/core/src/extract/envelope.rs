use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::constants::FWHM_PER_SIGMA;
use crate::error::{Error, Result};
use crate::numfit::{
    levenberg_marquardt, profile_likelihood_ci, FitOutcome, FitProblem, IntervalKind,
    ProfileInterval, Residuals,
};

/// Which pipeline produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SingleEnergy,
    ResonantDifference,
    ResonanceSpectrum,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::SingleEnergy => "single-energy",
            Method::ResonantDifference => "resonant-difference",
            Method::ResonanceSpectrum => "resonance-spectrum",
        }
    }
}

/// Point estimate with a 95 % interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    fn symmetric(value: f64, half: f64) -> Self {
        let half = if half.is_finite() { half.abs() } else { f64::INFINITY };
        Self {
            value,
            lower: value - half,
            upper: value + half,
        }
    }

    fn from_interval(ci: &ProfileInterval) -> Self {
        Self {
            value: ci.estimate,
            lower: ci.lower,
            upper: ci.upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub method: Method,
    pub depth_nm: Estimate,
    pub sigma_nm: Estimate,
    pub fwhm_nm: Estimate,
    /// A in A·exp(−(Qσ)²/2)·sin(Qd − φ); equals 2r0·N2D·|Δf| for a
    /// step-like host.
    pub amplitude: Estimate,
    /// φ in [0, 2π).
    pub phase_rad: Estimate,
    pub thickness_interval: IntervalKind,
    pub window: (f64, f64),
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// A·exp(−(Qσ)²/2)·sin(Qd − φ).
pub fn envelope_value(params: &[f64], q: f64) -> f64 {
    let [a, s, d, phi] = [params[0], params[1], params[2], params[3]];
    a * (-0.5 * (q * s).powi(2)).exp() * (q * d - phi).sin()
}

/// Gaussian-envelope oscillation model against a normalised signal.
pub struct EnvelopeModel<'a> {
    pub q: &'a [f64],
    pub signal: &'a [f64],
}

impl Residuals for EnvelopeModel<'_> {
    fn n_params(&self) -> usize {
        4
    }

    fn n_residuals(&self) -> usize {
        self.q.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for ((o, q), s) in out.iter_mut().zip(self.q).zip(self.signal) {
            *o = envelope_value(p, *q) - s;
        }
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let [a, s, d, phi] = [p[0], p[1], p[2], p[3]];
        Some(DMatrix::from_fn(self.q.len(), 4, |i, j| {
            let q = self.q[i];
            let env = (-0.5 * (q * s).powi(2)).exp();
            let arg = q * d - phi;
            match j {
                0 => env * arg.sin(),
                1 => -a * q * q * s * env * arg.sin(),
                2 => a * q * env * arg.cos(),
                _ => -a * env * arg.cos(),
            }
        }))
    }
}

const START_SIGMA_NM: f64 = 0.3;
const MAX_SIGMA_NM: f64 = 5.0;

/// Fits A·exp(−(Qσ)²/2)·sin(Qd − φ) to `signal/√normalizer`.
///
/// Four starts over φ; d is kept within ±50 % of `depth_guess`. The σ (and
/// FWHM) interval comes from the profile likelihood, the others from the
/// covariance.
pub fn fit_envelope(
    q: &[f64],
    signal: &[f64],
    normalizer: &[f64],
    method: Method,
    depth_guess: f64,
) -> Result<ExtractionResult> {
    if q.len() != signal.len() || q.len() != normalizer.len() {
        return Err(Error::Grid("signal, normalizer and Q lengths differ".into()));
    }
    if !(depth_guess > 0.0) {
        return Err(Error::Domain(format!("depth guess must be > 0, got {depth_guess}")));
    }
    let s: Vec<f64> = signal
        .iter()
        .zip(normalizer)
        .map(|(v, n)| v / n.sqrt())
        .collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("normalised signal is not finite on the window".into()));
    }
    let model = EnvelopeModel { q, signal: &s };
    let lower = vec![0.0, 0.0, 0.5 * depth_guess, f64::NEG_INFINITY];
    let upper = vec![f64::INFINITY, MAX_SIGMA_NM, 1.5 * depth_guess, f64::INFINITY];

    let mut best: Option<(FitOutcome, FitProblem<'_>)> = None;
    let mut diagnostics = Vec::new();
    for k in 0..4 {
        let phi0 = k as f64 * std::f64::consts::FRAC_PI_2;
        let shape: Vec<f64> = q
            .iter()
            .map(|&qi| envelope_value(&[1.0, START_SIGMA_NM, depth_guess, phi0], qi))
            .collect();
        let num: f64 = shape.iter().zip(&s).map(|(a, b)| a * b).sum();
        let den: f64 = shape.iter().map(|a| a * a).sum();
        let a0 = if den > 0.0 { (num / den).abs() } else { 0.0 };
        let a0 = if a0 > 0.0 {
            a0
        } else {
            s.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let problem = FitProblem::new(&model, vec![a0, START_SIGMA_NM, depth_guess, phi0])
            .with_bounds(lower.clone(), upper.clone());
        match levenberg_marquardt(&problem) {
            Ok(out) => {
                diagnostics.push(format!(
                    "start φ={phi0:.3}: cost {:.3e}, {:?}",
                    out.cost(),
                    out.termination
                ));
                let better = out.converged
                    && best.as_ref().is_none_or(|(b, _)| out.cost() < b.cost());
                if better {
                    best = Some((out, problem));
                }
            }
            Err(e) => diagnostics.push(format!("start φ={phi0:.3}: {e}")),
        }
    }
    let Some((out, problem)) = best else {
        return Err(Error::FitFailed(format!(
            "no start converged: {}",
            diagnostics.join("; ")
        )));
    };

    let sigma_ci = profile_likelihood_ci(&problem, &out, 1, 0.95)?;
    let dof = out.degrees_of_freedom.max(1) as f64;
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::FitFailed(e.to_string()))?
        .inverse_cdf(0.975);
    let p = &out.params;
    let two_pi = 2.0 * std::f64::consts::PI;
    let phase = p[3].rem_euclid(two_pi);
    let mut amplitude = Estimate::symmetric(p[0], t * out.std_error(0));
    amplitude.lower = amplitude.lower.max(0.0);
    let sigma = Estimate::from_interval(&sigma_ci);
    let fwhm = Estimate::from_interval(&sigma_ci.scaled(FWHM_PER_SIGMA));
    Ok(ExtractionResult {
        method,
        depth_nm: Estimate::symmetric(p[2], t * out.std_error(2)),
        sigma_nm: sigma,
        fwhm_nm: fwhm,
        amplitude,
        phase_rad: Estimate::symmetric(phase, t * out.std_error(3)),
        thickness_interval: sigma_ci.kind,
        window: (q[0], q[q.len() - 1]),
        residual_rms: out.residual_norm / (q.len() as f64).sqrt(),
        converged: out.converged,
        iterations: out.iterations,
    })
}
