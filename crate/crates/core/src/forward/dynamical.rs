use num_complex::Complex64;
use rayon::prelude::*;

use super::{q_from_theta, EnergyScan, ReflectivityCurve};
use crate::constants::wavelength_nm;
use crate::error::{Error, Result};
use crate::model::{DeltaLayerSpec, DeltaShape, LayerStack};
use crate::xsf::TableSet;

/// Widest sub-slab used to represent a δ-layer in the recursion.
pub const SLAB_WIDTH_NM: f64 = 0.1;

/// Homogeneous slab; `thickness_nm` is `None` for the substrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub rho: Complex64,
    pub thickness_nm: Option<f64>,
    /// Roughness of the slab's top interface.
    pub roughness_nm: f64,
}

/// Stack of homogeneous slabs below vacuum at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabModel {
    pub slabs: Vec<Slab>,
    pub energy_ev: f64,
}

/// Converts a stack and optional δ-layer into homogeneous slabs.
///
/// The δ-layer region (±4σ for a Gaussian) is cut into sub-slabs no wider
/// than `max_width_nm`; each carries the host SLD plus r0·Δf·N2D times the
/// cell-averaged shape, with cell masses renormalised to sum to one. Host
/// roughness is kept only on the real interfaces.
pub fn slab_model(
    stack: &LayerStack,
    delta: Option<&DeltaLayerSpec>,
    tables: &TableSet,
    energy_ev: f64,
    max_width_nm: f64,
) -> Result<SlabModel> {
    if !(max_width_nm > 0.0) {
        return Err(Error::Domain(format!("slab width must be > 0, got {max_width_nm}")));
    }
    let rhos = stack.slds(tables, energy_ev)?;
    let tops = stack.interface_depths();
    let layers = stack.layers();

    let delta = delta.filter(|d| d.n2d_per_nm2 != 0.0);
    let Some(delta) = delta else {
        let slabs = layers
            .iter()
            .zip(&rhos)
            .map(|(l, &rho)| Slab {
                rho,
                thickness_nm: match l.thickness {
                    crate::model::Thickness::Finite(t) => Some(t),
                    crate::model::Thickness::SemiInfinite => None,
                },
                roughness_nm: l.roughness_nm,
            })
            .collect();
        return Ok(SlabModel { slabs, energy_ev });
    };

    let weight = delta.sld_weight(tables, energy_ev)?;
    let d = delta.depth_nm;
    let (lo, hi) = match delta.shape {
        DeltaShape::Dirac => (d - 0.5 * max_width_nm, d + 0.5 * max_width_nm),
        ref s => (d - s.half_support(), d + s.half_support()),
    };
    let lo = lo.max(0.0);
    let cells = (((hi - lo) / max_width_nm).ceil() as usize).max(1);
    let edges = super::linspace(lo, hi, cells + 1);
    let mut masses: Vec<f64> = edges
        .windows(2)
        .map(|e| delta.shape.mass(e[0] - d, e[1] - d))
        .collect();
    let total: f64 = masses.iter().sum();
    if total > 0.0 {
        masses.iter_mut().for_each(|m| *m /= total);
    }

    let mut bounds: Vec<f64> = tops.iter().copied().chain(edges.iter().copied()).collect();
    bounds.sort_by(|a, b| a.total_cmp(b));
    bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let is_top = |z: f64| tops.iter().position(|t| (t - z).abs() < 1e-12);
    let mut slabs = Vec::with_capacity(bounds.len() + 1);
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let li = stack.layer_at(mid).unwrap_or(0);
        let mut rho = rhos[li];
        if mid > lo && mid < hi {
            let j = edges.partition_point(|e| *e <= mid).clamp(1, cells) - 1;
            rho += weight * (masses[j] / (edges[j + 1] - edges[j]));
        }
        let roughness_nm = match is_top(a) {
            Some(k) if k == li => layers[li].roughness_nm,
            _ => 0.0,
        };
        slabs.push(Slab {
            rho,
            thickness_nm: Some(b - a),
            roughness_nm,
        });
    }
    let last = *bounds.last().expect("at least the surface");
    let sub = layers.len() - 1;
    let roughness_nm = match is_top(last) {
        Some(k) if k == sub => layers[sub].roughness_nm,
        _ => 0.0,
    };
    slabs.push(Slab {
        rho: rhos[sub],
        thickness_nm: None,
        roughness_nm,
    });
    Ok(SlabModel { slabs, energy_ev })
}

impl SlabModel {
    /// Complex reflection amplitude by interface recursion with Névot–Croce
    /// factors exp(−2·kz_j·kz_{j+1}·σ²).
    pub fn amplitude(&self, q: f64) -> Result<Complex64> {
        if q == 0.0 {
            return Err(Error::Singularity("reflectivity undefined at Q = 0".into()));
        }
        let lambda = wavelength_nm(self.energy_ev);
        let k = 2.0 * std::f64::consts::PI / lambda;
        let sin_t = q * lambda / (4.0 * std::f64::consts::PI);
        if !(sin_t > 0.0 && sin_t <= 1.0) {
            return Err(Error::Domain(format!(
                "Q = {q} nm^-1 is not reachable at {} eV",
                self.energy_ev
            )));
        }
        let cos2 = 1.0 - sin_t * sin_t;
        let scale = lambda * lambda / (2.0 * std::f64::consts::PI);
        let kz = |rho: Complex64| -> Complex64 {
            let n = Complex64::new(1.0, 0.0) - rho * scale;
            (n * n - cos2).sqrt() * k
        };
        let one = Complex64::new(1.0, 0.0);
        let kz_vac = (one * one - cos2).sqrt() * k;
        let kzs: Vec<Complex64> = std::iter::once(kz_vac)
            .chain(self.slabs.iter().map(|s| kz(s.rho)))
            .collect();
        let mut x = Complex64::new(0.0, 0.0);
        for j in (0..self.slabs.len()).rev() {
            let (ka, kb) = (kzs[j], kzs[j + 1]);
            let sigma = self.slabs[j].roughness_nm;
            let mut r = (ka - kb) / (ka + kb);
            if sigma > 0.0 {
                r *= (-2.0 * ka * kb * sigma * sigma).exp();
            }
            let prop = match self.slabs[j].thickness_nm {
                Some(t) => x * (Complex64::new(0.0, -2.0) * kb * t).exp(),
                None => Complex64::new(0.0, 0.0),
            };
            x = (r + prop) / (one + r * prop);
        }
        Ok(x)
    }

    pub fn reflectivity(&self, q: f64) -> Result<f64> {
        self.amplitude(q).map(|x| x.norm_sqr())
    }
}

/// Exact specular reflectivity of the stack (σ polarisation).
pub fn dynamical_reflectivity(
    stack: &LayerStack,
    delta: Option<&DeltaLayerSpec>,
    tables: &TableSet,
    energy_ev: f64,
    q: &[f64],
) -> Result<ReflectivityCurve> {
    if q.contains(&0.0) {
        return Err(Error::Singularity("Q grid contains 0".into()));
    }
    let model = slab_model(stack, delta, tables, energy_ev, SLAB_WIDTH_NM)?;
    let r = q
        .par_iter()
        .map(|&qi| model.reflectivity(qi))
        .collect::<Result<Vec<f64>>>()?;
    ReflectivityCurve::new(q.to_vec(), r, energy_ev)
}

/// Single-interface reflectance from medium `n1` into `n2` at grazing angle
/// `theta_deg` measured in medium 1.
pub fn fresnel_reflectance(n1: Complex64, n2: Complex64, theta_deg: f64) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::Domain(format!(
            "incidence angle must lie in (0, 90] degrees, got {theta_deg}"
        )));
    }
    let s = theta_deg.to_radians().sin();
    let cos2 = 1.0 - s * s;
    // n1 cos θ1 = n2 cos θ2
    let c = n1 * n1 * cos2;
    let a = (n1 * n1 - c).sqrt();
    let b = (n2 * n2 - c).sqrt();
    Ok(((a - b) / (a + b)).norm_sqr())
}

/// Reflectivity at fixed `theta_deg` across `energies_ev`, re-evaluating the
/// scattering factors at each energy.
pub fn simulate_energy_scan(
    stack: &LayerStack,
    delta: Option<&DeltaLayerSpec>,
    tables: &TableSet,
    theta_deg: f64,
    energies_ev: &[f64],
) -> Result<EnergyScan> {
    let r = energies_ev
        .par_iter()
        .map(|&e| {
            let q = q_from_theta(theta_deg, e)?;
            slab_model(stack, delta, tables, e, SLAB_WIDTH_NM)?.reflectivity(q)
        })
        .collect::<Result<Vec<f64>>>()?;
    EnergyScan::new(theta_deg, energies_ev.to_vec(), r, true)
}
