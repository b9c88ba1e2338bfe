//! Reflectivity forward models.

mod born;
mod dynamical;
mod noise;

pub use born::{born_amplitude, born_reflectivity, BORN_RELIABLE_Q_MIN};
pub use dynamical::{
    dynamical_reflectivity, fresnel_reflectance, simulate_energy_scan, slab_model, Slab,
    SlabModel, SLAB_WIDTH_NM,
};
pub use noise::add_counting_noise;

use crate::constants::wavelength_nm;
use crate::error::{Error, Result};
use crate::model::{discretize, DeltaLayerSpec, GridOptions, LayerStack};
use crate::xsf::TableSet;

/// Forward model used to produce a reflectivity curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Born,
    Dynamical,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Born => "born",
            Solver::Dynamical => "dynamical",
        }
    }

    /// R(Q) of `stack` with the optional δ-layer at `energy_ev`.
    ///
    /// The Born path discretizes on `grid`, with its Q limit raised to the
    /// largest requested Q; the dynamical path ignores `grid`.
    pub fn simulate(
        self,
        stack: &LayerStack,
        delta: Option<&DeltaLayerSpec>,
        tables: &TableSet,
        energy_ev: f64,
        q: &[f64],
        grid: &GridOptions,
    ) -> Result<ReflectivityCurve> {
        match self {
            Solver::Born => {
                let q_max = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let opts = GridOptions {
                    q_max: Some(grid.q_max.map_or(q_max, |g| g.max(q_max))),
                    ..*grid
                };
                let profile = discretize(stack, delta, tables, energy_ev, &opts)?;
                born_reflectivity(&profile, q)
            }
            Solver::Dynamical => dynamical_reflectivity(stack, delta, tables, energy_ev, q),
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "born" => Ok(Solver::Born),
            "dynamical" | "parratt" => Ok(Solver::Dynamical),
            other => Err(Error::Domain(format!(
                "unknown solver {other:?}; expected born or dynamical"
            ))),
        }
    }
}

/// Momentum transfer 4π sin θ / λ for a grazing angle in degrees.
pub fn q_from_theta(theta_deg: f64, energy_ev: f64) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::Domain(format!(
            "incidence angle must lie in (0, 90] degrees, got {theta_deg}"
        )));
    }
    Ok(4.0 * std::f64::consts::PI * theta_deg.to_radians().sin() / wavelength_nm(energy_ev))
}

/// Inverse of [`q_from_theta`].
pub fn theta_from_q(q: f64, energy_ev: f64) -> Result<f64> {
    let s = q * wavelength_nm(energy_ev) / (4.0 * std::f64::consts::PI);
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!(
            "Q = {q} nm^-1 is not reachable at {energy_ev} eV"
        )));
    }
    Ok(s.asin().to_degrees())
}

/// Specular reflectivity sampled on a Q grid at one photon energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityCurve {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub energy_ev: f64,
    pub sigma_r: Option<Vec<f64>>,
    pub theta_deg: Option<Vec<f64>>,
    /// Below this Q the values come from a model known to break down there.
    pub unreliable_below_q: Option<f64>,
}

impl ReflectivityCurve {
    pub fn new(q: Vec<f64>, r: Vec<f64>, energy_ev: f64) -> Result<Self> {
        if q.len() != r.len() {
            return Err(Error::Grid(format!(
                "{} Q values but {} reflectivities",
                q.len(),
                r.len()
            )));
        }
        if q.is_empty() {
            return Err(Error::Grid("empty curve".into()));
        }
        if q.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("Q must be strictly increasing".into()));
        }
        if let Some(v) = r.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("reflectivity must be finite and >= 0, got {v}")));
        }
        Ok(Self {
            q,
            r,
            energy_ev,
            sigma_r: None,
            theta_deg: None,
            unreliable_below_q: None,
        })
    }

    /// Builds the Q grid from incidence angles at `energy_ev`.
    pub fn from_theta(theta_deg: Vec<f64>, r: Vec<f64>, energy_ev: f64) -> Result<Self> {
        let q = q_grid_from_theta(&theta_deg, energy_ev)?;
        let mut c = Self::new(q, r, energy_ev)?;
        c.theta_deg = Some(theta_deg);
        Ok(c)
    }

    pub fn with_sigma(mut self, sigma_r: Vec<f64>) -> Result<Self> {
        if sigma_r.len() != self.q.len() {
            return Err(Error::Grid("uncertainty column length mismatch".into()));
        }
        self.sigma_r = Some(sigma_r);
        Ok(self)
    }

    /// Attaches the incidence angles matching the current Q grid.
    pub fn with_theta_grid(mut self) -> Result<Self> {
        let theta = self
            .q
            .iter()
            .map(|&q| theta_from_q(q, self.energy_ev))
            .collect::<Result<Vec<_>>>()?;
        self.theta_deg = Some(theta);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q_range(&self) -> (f64, f64) {
        (self.q[0], self.q[self.q.len() - 1])
    }
}

pub fn q_grid_from_theta(theta_deg: &[f64], energy_ev: f64) -> Result<Vec<f64>> {
    theta_deg.iter().map(|&t| q_from_theta(t, energy_ev)).collect()
}

/// Evenly spaced grid of `n` points over [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Reflectivity at a fixed angle across photon energies.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyScan {
    pub theta_deg: f64,
    pub energy_ev: Vec<f64>,
    pub r: Vec<f64>,
    /// True when R is relative to incident flux, false for raw counts.
    pub normalized: bool,
}

impl EnergyScan {
    pub fn new(theta_deg: f64, energy_ev: Vec<f64>, r: Vec<f64>, normalized: bool) -> Result<Self> {
        if energy_ev.len() != r.len() || energy_ev.is_empty() {
            return Err(Error::Grid("energy and reflectivity columns differ in length".into()));
        }
        if energy_ev.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("energies must be strictly increasing".into()));
        }
        if r.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain("reflectivity must be >= 0".into()));
        }
        Ok(Self {
            theta_deg,
            energy_ev,
            r,
            normalized,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::HC_EV_NM;

    #[test]
    fn q_at_normal_incidence() {
        let q = q_from_theta(90.0, HC_EV_NM).unwrap();
        assert!((q - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn q_at_22_degrees_and_094_nm() {
        let q = q_from_theta(22.0, HC_EV_NM / 0.94).unwrap();
        assert!((q - 5.0).abs() < 0.01, "{q}");
    }

    #[test]
    fn q_at_10_degrees_1324_ev() {
        // 4π·sin(10°)·1324/1239.841984
        let q = q_from_theta(10.0, 1324.0).unwrap();
        assert!((q - 2.3303).abs() < 5e-4, "{q}");
    }

    #[test]
    fn q_domain() {
        assert!(q_from_theta(0.0, 1300.0).is_err());
        assert!(q_from_theta(90.5, 1300.0).is_err());
    }

    #[test]
    fn theta_round_trip() {
        let q = q_from_theta(7.3, 1335.0).unwrap();
        let t = theta_from_q(q, 1335.0).unwrap();
        assert!((t - 7.3).abs() < 1e-10);
    }

    #[test]
    fn curve_from_theta_consistency() {
        let theta = vec![2.0, 5.0, 10.0];
        let c = ReflectivityCurve::from_theta(theta.clone(), vec![1e-3, 1e-4, 1e-5], 1300.0).unwrap();
        for (q, t) in c.q.iter().zip(&theta) {
            let expect = 4.0 * std::f64::consts::PI * t.to_radians().sin() / wavelength_nm(1300.0);
            assert!(((q - expect) / expect).abs() < 1e-9);
        }
    }

    #[test]
    fn curve_validation() {
        assert!(ReflectivityCurve::new(vec![1.0, 1.0], vec![0.1, 0.1], 1300.0).is_err());
        assert!(ReflectivityCurve::new(vec![1.0, 2.0], vec![0.1, -0.1], 1300.0).is_err());
        assert!(EnergyScan::new(10.0, vec![1300.0, 1290.0], vec![0.1, 0.1], true).is_err());
    }
}
