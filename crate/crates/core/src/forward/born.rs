use num_complex::Complex64;
use rayon::prelude::*;

use super::ReflectivityCurve;
use crate::error::{Error, Result};
use crate::model::DensityProfile;

/// Below this Q the kinematic result is flagged as unreliable.
pub const BORN_RELIABLE_Q_MIN: f64 = 1.5;

/// ∫ρ(z)e^(−iQz)dz from the grid samples, read as a band-limited profile.
///
/// The transform is taken on the sample differences, ∫ρ′e^(−iQz)dz/(iQ), and
/// divided by sinc(QΔz/2) so smooth (rough-interface) profiles carry no
/// O((QΔz)²) bias. Above the grid ρ is zero and below it the last sample
/// continues as a step, added in closed form.
pub fn born_amplitude(profile: &DensityProfile, q: f64) -> Result<Complex64> {
    if q == 0.0 {
        return Err(Error::Singularity("Born amplitude diverges at Q = 0".into()));
    }
    profile.check_nyquist(q.abs())?;
    let dz = profile.dz_nm;
    let x = 0.5 * q * dz;
    let sinc = if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
    let rho = &profile.rho;
    let step = Complex64::from_polar(1.0, -q * dz);
    let mut phase = Complex64::from_polar(1.0, -q * (profile.z0_nm + 0.5 * dz));
    let mut acc = Complex64::new(0.0, 0.0);
    for w in rho.windows(2) {
        acc += (w[1] - w[0]) * phase;
        phase *= step;
    }
    let top = rho.first().copied().unwrap_or_default()
        * Complex64::from_polar(1.0, -q * profile.z0_nm);
    Ok((acc / sinc + top) / Complex64::new(0.0, q))
}

/// R(Q) = (4π)²/Q²·|∫ρ e^(−iQz) dz|².
pub fn born_reflectivity(profile: &DensityProfile, q: &[f64]) -> Result<ReflectivityCurve> {
    if q.contains(&0.0) {
        return Err(Error::Singularity("Q grid contains 0".into()));
    }
    let qmax = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    profile.check_nyquist(qmax)?;
    let r = q
        .par_iter()
        .map(|&qi| {
            born_amplitude(profile, qi).map(|f| {
                let pref = 4.0 * std::f64::consts::PI / qi;
                pref * pref * f.norm_sqr()
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut curve = ReflectivityCurve::new(q.to_vec(), r, profile.energy_ev)?;
    curve.unreliable_below_q = Some(BORN_RELIABLE_Q_MIN);
    Ok(curve)
}
