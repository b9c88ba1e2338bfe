//! Layered samples, δ-layer descriptions and their depth profiles.
//!
//! Depth z is measured from the sample surface and increases into the
//! sample; z < 0 is vacuum.

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::constants::{FWHM_PER_SIGMA, R0_NM};
use crate::error::{Error, Result};
use crate::xsf::{normalize_symbol, sld, Material, TableSet};

/// Slab thickness; only the substrate is semi-infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thickness {
    Finite(f64),
    SemiInfinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub material: Material,
    pub thickness: Thickness,
    /// RMS roughness of the layer's top interface, nm.
    pub roughness_nm: f64,
}

impl Layer {
    pub fn new(material: Material, thickness_nm: f64, roughness_nm: f64) -> Result<Self> {
        if !(thickness_nm > 0.0 && thickness_nm.is_finite()) {
            return Err(Error::Domain(format!(
                "layer thickness must be positive and finite, got {thickness_nm}"
            )));
        }
        check_roughness(roughness_nm)?;
        Ok(Self {
            material,
            thickness: Thickness::Finite(thickness_nm),
            roughness_nm,
        })
    }

    pub fn substrate(material: Material, roughness_nm: f64) -> Result<Self> {
        check_roughness(roughness_nm)?;
        Ok(Self {
            material,
            thickness: Thickness::SemiInfinite,
            roughness_nm,
        })
    }
}

fn check_roughness(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("roughness must be >= 0, got {sigma}")));
    }
    Ok(())
}

/// Slabs ordered from the surface down, ending with the substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let semi: Vec<usize> = layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.thickness == Thickness::SemiInfinite)
            .map(|(i, _)| i)
            .collect();
        match semi.as_slice() {
            [i] if *i + 1 == layers.len() => Ok(Self { layers }),
            [] => Err(Error::Domain("stack has no semi-infinite substrate".into())),
            [_] => Err(Error::Domain("semi-infinite layer must be the last one".into())),
            _ => Err(Error::Domain("stack has more than one semi-infinite layer".into())),
        }
    }

    /// A bare substrate.
    pub fn substrate_only(material: Material, roughness_nm: f64) -> Result<Self> {
        Self::new(vec![Layer::substrate(material, roughness_nm)?])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn substrate(&self) -> &Layer {
        self.layers.last().expect("validated non-empty")
    }

    /// Depth of each layer's top interface.
    pub fn interface_depths(&self) -> Vec<f64> {
        let mut z = 0.0;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            out.push(z);
            if let Thickness::Finite(t) = layer.thickness {
                z += t;
            }
        }
        out
    }

    /// Summed thickness of the finite layers.
    pub fn finite_thickness(&self) -> f64 {
        self.layers
            .iter()
            .filter_map(|l| match l.thickness {
                Thickness::Finite(t) => Some(t),
                Thickness::SemiInfinite => None,
            })
            .sum()
    }

    /// Index of the layer containing depth `z`; `None` above the surface.
    pub fn layer_at(&self, z: f64) -> Option<usize> {
        if z < 0.0 {
            return None;
        }
        let tops = self.interface_depths();
        Some(tops.iter().rposition(|&top| z >= top).unwrap_or(0))
    }

    pub fn elements(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in &self.layers {
            for e in l.material.elements() {
                if !out.iter().any(|x| x == e) {
                    out.push(e.to_owned());
                }
            }
        }
        out
    }

    /// Scattering-length density of every layer at one energy.
    pub fn slds(&self, tables: &TableSet, energy_ev: f64) -> Result<Vec<Complex64>> {
        self.layers
            .iter()
            .map(|l| sld(&l.material, tables, energy_ev))
            .collect()
    }
}

/// Normalised depth shape h(z) of a δ-layer, centred on 0.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaShape {
    Dirac,
    Gaussian { sigma_nm: f64 },
    /// Samples of an even function on an ascending grid symmetric about 0,
    /// linearly interpolated and zero outside.
    Tabulated { z_nm: Vec<f64>, h: Vec<f64> },
}

impl DeltaShape {
    pub fn gaussian(sigma_nm: f64) -> Result<Self> {
        if !(sigma_nm > 0.0 && sigma_nm.is_finite()) {
            return Err(Error::Domain(format!("gaussian sigma must be > 0, got {sigma_nm}")));
        }
        Ok(DeltaShape::Gaussian { sigma_nm })
    }

    pub fn gaussian_fwhm(fwhm_nm: f64) -> Result<Self> {
        Self::gaussian(fwhm_nm / FWHM_PER_SIGMA)
    }

    /// Validates symmetry and rescales so that ∫h dz = 1.
    pub fn tabulated(z_nm: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if z_nm.len() != h.len() || z_nm.len() < 3 {
            return Err(Error::Domain(
                "tabulated shape needs matching z and h columns with at least 3 samples".into(),
            ));
        }
        if z_nm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("tabulated shape z must be strictly increasing".into()));
        }
        if h.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("tabulated shape values must be finite and >= 0".into()));
        }
        let n = z_nm.len();
        let scale = z_nm[n - 1].abs().max(z_nm[0].abs());
        let hmax = h.iter().cloned().fold(0.0, f64::max);
        for i in 0..n {
            let j = n - 1 - i;
            if (z_nm[i] + z_nm[j]).abs() > 1e-9 * scale || (h[i] - h[j]).abs() > 1e-9 * hmax {
                return Err(Error::Domain("tabulated shape must be even about z = 0".into()));
            }
        }
        let area: f64 = z_nm
            .windows(2)
            .zip(h.windows(2))
            .map(|(z, v)| 0.5 * (v[0] + v[1]) * (z[1] - z[0]))
            .sum();
        if !(area > 0.0) {
            return Err(Error::Domain("tabulated shape has zero area".into()));
        }
        let h = h.into_iter().map(|v| v / area).collect();
        Ok(DeltaShape::Tabulated { z_nm, h })
    }

    pub fn sigma_nm(&self) -> Option<f64> {
        match self {
            DeltaShape::Gaussian { sigma_nm } => Some(*sigma_nm),
            _ => None,
        }
    }

    /// Half-width beyond which h is negligible (Gaussian: 4σ).
    pub fn half_support(&self) -> f64 {
        match self {
            DeltaShape::Dirac => 0.0,
            DeltaShape::Gaussian { sigma_nm } => 4.0 * sigma_nm,
            DeltaShape::Tabulated { z_nm, .. } => z_nm[z_nm.len() - 1],
        }
    }

    /// Half-width the depth grid must cover below the centre.
    pub fn coverage_half_width(&self) -> f64 {
        match self {
            DeltaShape::Gaussian { sigma_nm } => 5.0 * sigma_nm,
            other => other.half_support(),
        }
    }

    /// ∫ₐᵇ h(z) dz.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match self {
            DeltaShape::Dirac => {
                if a <= 0.0 && 0.0 < b {
                    1.0
                } else {
                    0.0
                }
            }
            DeltaShape::Gaussian { sigma_nm } => {
                let s = std::f64::consts::SQRT_2 * sigma_nm;
                0.5 * (erf(b / s) - erf(a / s))
            }
            DeltaShape::Tabulated { z_nm, h } => {
                let cum = |x: f64| tabulated_cumulative(z_nm, h, x);
                cum(b) - cum(a)
            }
        }
    }

    /// Point value h(z); Dirac has none.
    pub fn value(&self, z: f64) -> Option<f64> {
        match self {
            DeltaShape::Dirac => None,
            DeltaShape::Gaussian { sigma_nm } => {
                let u = z / sigma_nm;
                Some((-0.5 * u * u).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma_nm))
            }
            DeltaShape::Tabulated { z_nm, h } => Some(interp_zero_outside(z_nm, h, z)),
        }
    }
}

fn interp_zero_outside(x: &[f64], y: &[f64], at: f64) -> f64 {
    if at < x[0] || at > x[x.len() - 1] {
        return 0.0;
    }
    let i = x.partition_point(|v| *v <= at).clamp(1, x.len() - 1);
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + t * (y[i] - y[i - 1])
}

/// ∫ from −∞ to `at` of the piecewise-linear tabulated shape.
fn tabulated_cumulative(x: &[f64], y: &[f64], at: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..x.len() {
        let (x0, x1) = (x[i - 1], x[i]);
        if at <= x0 {
            break;
        }
        let hi = at.min(x1);
        let y_hi = y[i - 1] + (y[i] - y[i - 1]) * (hi - x0) / (x1 - x0);
        acc += 0.5 * (y[i - 1] + y_hi) * (hi - x0);
    }
    acc
}

/// Dilute sheet of `dopant` atoms substituting `host` atoms around `depth_nm`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaLayerSpec {
    pub depth_nm: f64,
    pub shape: DeltaShape,
    pub n2d_per_nm2: f64,
    pub dopant: String,
    pub host: String,
}

impl DeltaLayerSpec {
    pub fn new(
        depth_nm: f64,
        shape: DeltaShape,
        n2d_per_nm2: f64,
        dopant: &str,
        host: &str,
    ) -> Result<Self> {
        if !(depth_nm > 0.0 && depth_nm.is_finite()) {
            return Err(Error::Domain(format!("delta-layer depth must be > 0, got {depth_nm}")));
        }
        if !(n2d_per_nm2 >= 0.0 && n2d_per_nm2.is_finite()) {
            return Err(Error::Domain(format!(
                "areal density must be finite and >= 0, got {n2d_per_nm2}"
            )));
        }
        Ok(Self {
            depth_nm,
            shape,
            n2d_per_nm2,
            dopant: normalize_symbol(dopant),
            host: normalize_symbol(host),
        })
    }

    /// Gaussian δ-layer parameterised by its FWHM.
    pub fn gaussian_fwhm(
        depth_nm: f64,
        fwhm_nm: f64,
        n2d_per_nm2: f64,
        dopant: &str,
        host: &str,
    ) -> Result<Self> {
        Self::new(depth_nm, DeltaShape::gaussian_fwhm(fwhm_nm)?, n2d_per_nm2, dopant, host)
    }

    pub fn with_n2d(&self, n2d_per_nm2: f64) -> Result<Self> {
        Self::new(
            self.depth_nm,
            self.shape.clone(),
            n2d_per_nm2,
            &self.dopant,
            &self.host,
        )
    }

    pub fn fwhm_nm(&self) -> Option<f64> {
        self.shape.sigma_nm().map(|s| s * FWHM_PER_SIGMA)
    }

    /// Mean of h(z − d) over [a, b].
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        self.shape.mass(a - self.depth_nm, b - self.depth_nm) / (b - a)
    }

    /// Amplitude prefactor r0·Δf·N2D, nm⁻¹.
    pub fn sld_weight(&self, tables: &TableSet, energy_ev: f64) -> Result<Complex64> {
        Ok(tables.delta_f(&self.dopant, &self.host, energy_ev)? * (R0_NM * self.n2d_per_nm2))
    }
}

/// Effective volume density N2D/δ for a layer of thickness `thickness_nm`.
pub fn three_d_density(n2d_per_nm2: f64, thickness_nm: f64) -> Result<f64> {
    if !(thickness_nm > 0.0) {
        return Err(Error::Domain(format!(
            "layer thickness must be > 0, got {thickness_nm}"
        )));
    }
    Ok(n2d_per_nm2 / thickness_nm)
}

/// Complex scattering-length density on a uniform depth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub z0_nm: f64,
    pub dz_nm: f64,
    pub rho: Vec<Complex64>,
    pub energy_ev: f64,
}

impl DensityProfile {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z0_nm + i as f64 * self.dz_nm
    }

    pub fn z_grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.z(i)).collect()
    }

    /// Largest Q this grid resolves, π/Δz.
    pub fn nyquist_q(&self) -> f64 {
        std::f64::consts::PI / self.dz_nm
    }

    pub fn check_nyquist(&self, q_max: f64) -> Result<()> {
        if q_max > self.nyquist_q() {
            return Err(Error::Sampling(format!(
                "grid spacing {} nm resolves Q up to {:.4} nm^-1, requested {q_max}",
                self.dz_nm,
                self.nyquist_q()
            )));
        }
        Ok(())
    }
}

/// Depth-grid settings for [`discretize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub dz_nm: f64,
    /// Vacuum above the surface.
    pub vacuum_nm: f64,
    /// Explicit bottom of the grid; default is the deepest feature plus
    /// `substrate_margin_nm`.
    pub bottom_nm: Option<f64>,
    pub substrate_margin_nm: f64,
    /// Q range the profile must support.
    pub q_max: Option<f64>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            dz_nm: 0.02,
            vacuum_nm: 2.0,
            bottom_nm: None,
            substrate_margin_nm: 5.0,
            q_max: None,
        }
    }
}

/// Depth the grid must reach so the finite layers and the δ-layer are covered.
pub fn required_bottom(stack: &LayerStack, delta: Option<&DeltaLayerSpec>) -> f64 {
    let mut need = stack.finite_thickness() + 3.0;
    if let Some(d) = delta {
        need = need.max(d.depth_nm + d.shape.coverage_half_width());
    }
    need
}

/// Samples ρ(z) for `stack` plus the optional δ-layer perturbation.
///
/// Rough interfaces are smeared with an error function; the δ-layer adds
/// r0·Δf·N2D·h(z − d) on top of the host, with h averaged over each grid cell.
pub fn discretize(
    stack: &LayerStack,
    delta: Option<&DeltaLayerSpec>,
    tables: &TableSet,
    energy_ev: f64,
    opts: &GridOptions,
) -> Result<DensityProfile> {
    if !(opts.dz_nm > 0.0 && opts.dz_nm.is_finite()) {
        return Err(Error::Domain(format!("grid spacing must be > 0, got {}", opts.dz_nm)));
    }
    if !(opts.vacuum_nm >= 0.0) {
        return Err(Error::Coverage("grid must start at or above the surface".into()));
    }
    let need = required_bottom(stack, delta);
    let bottom = match opts.bottom_nm {
        Some(b) if b < need => {
            return Err(Error::Coverage(format!(
                "grid ends at {b} nm but must reach {need:.3} nm"
            )))
        }
        Some(b) => b,
        None => {
            let deepest = delta.map_or(0.0, |d| d.depth_nm + d.shape.coverage_half_width());
            stack.finite_thickness().max(deepest) + opts.substrate_margin_nm.max(3.0)
        }
    };
    let z0 = -opts.vacuum_nm;
    let n = ((bottom - z0) / opts.dz_nm).ceil() as usize + 1;
    let mut profile = DensityProfile {
        z0_nm: z0,
        dz_nm: opts.dz_nm,
        rho: vec![Complex64::new(0.0, 0.0); n],
        energy_ev,
    };
    if let Some(q) = opts.q_max {
        profile.check_nyquist(q)?;
    }

    let rhos = stack.slds(tables, energy_ev)?;
    let tops = stack.interface_depths();
    let mut above = Complex64::new(0.0, 0.0);
    for ((layer, &top), &rho) in stack.layers().iter().zip(&tops).zip(&rhos) {
        let step = rho - above;
        above = rho;
        if step == Complex64::new(0.0, 0.0) {
            continue;
        }
        let s = layer.roughness_nm * std::f64::consts::SQRT_2;
        for (i, v) in profile.rho.iter_mut().enumerate() {
            let u = z0 + i as f64 * opts.dz_nm - top;
            let frac = if s > 0.0 {
                0.5 * (1.0 + erf(u / s))
            } else if u > 0.0 {
                1.0
            } else if u == 0.0 {
                0.5
            } else {
                0.0
            };
            *v += step * frac;
        }
    }

    if let Some(d) = delta {
        let weight = d.sld_weight(tables, energy_ev)?;
        let half = 0.5 * opts.dz_nm;
        for (i, v) in profile.rho.iter_mut().enumerate() {
            let z = z0 + i as f64 * opts.dz_nm;
            let h = d.cell_average(z - half, z + half);
            if h != 0.0 {
                *v += weight * h;
            }
        }
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xsf::BuiltinTables;

    fn si() -> Material {
        Material::new([("Si", 50.0)]).unwrap()
    }

    #[test]
    fn stack_validation() {
        let sub = Layer::substrate(si(), 0.0).unwrap();
        let slab = Layer::new(si(), 1.0, 0.0).unwrap();
        assert!(LayerStack::new(vec![slab.clone(), sub.clone()]).is_ok());
        assert!(LayerStack::new(vec![sub.clone(), slab.clone()]).is_err());
        assert!(LayerStack::new(vec![slab.clone()]).is_err());
        assert!(LayerStack::new(vec![sub.clone(), sub]).is_err());
        assert!(Layer::new(si(), 1.0, -0.1).is_err());
        assert!(Layer::new(si(), 0.0, 0.0).is_err());
    }

    #[test]
    fn layer_lookup() {
        let stack = LayerStack::new(vec![
            Layer::new(si(), 1.0, 0.0).unwrap(),
            Layer::new(si(), 2.0, 0.0).unwrap(),
            Layer::substrate(si(), 0.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(stack.layer_at(-0.1), None);
        assert_eq!(stack.layer_at(0.5), Some(0));
        assert_eq!(stack.layer_at(1.0), Some(1));
        assert_eq!(stack.layer_at(10.0), Some(2));
        assert_eq!(stack.interface_depths(), vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn tabulated_shape_is_renormalised_and_idempotent() {
        let z = vec![-1.0, 0.0, 1.0];
        let shape = DeltaShape::tabulated(z.clone(), vec![0.0, 4.0, 0.0]).unwrap();
        let DeltaShape::Tabulated { h, .. } = &shape else { unreachable!() };
        assert!((h[1] - 1.0).abs() < 1e-15);
        let again = DeltaShape::tabulated(z, h.clone()).unwrap();
        assert_eq!(again, shape);
        assert!((shape.mass(-5.0, 5.0) - 1.0).abs() < 1e-15);
        assert!((shape.mass(-5.0, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_tabulated_shape_rejected() {
        assert!(DeltaShape::tabulated(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.5]).is_err());
        assert!(DeltaShape::tabulated(vec![-1.0, 0.0, 2.0], vec![0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn three_d_density_values() {
        assert!((three_d_density(2.77, 1.6).unwrap() - 1.73125).abs() < 1e-12);
        assert_eq!(three_d_density(0.0, 1.6).unwrap(), 0.0);
        assert!(three_d_density(2.77, 0.0).is_err());
        assert!(three_d_density(2.77, 1.6).unwrap() / 50.0 < 0.05);
    }

    #[test]
    fn sharp_substrate_step() {
        let tables = TableSet::builtin(BuiltinTables::Chantler);
        let stack = LayerStack::substrate_only(si(), 0.0).unwrap();
        let p = discretize(&stack, None, &tables, 1300.0, &GridOptions::default()).unwrap();
        let rho_si = sld(&si(), &tables, 1300.0).unwrap();
        for i in 0..p.len() {
            let z = p.z(i);
            if z < -p.dz_nm {
                assert_eq!(p.rho[i], Complex64::new(0.0, 0.0));
            } else if z > p.dz_nm {
                assert_eq!(p.rho[i], rho_si);
            }
        }
    }

    #[test]
    fn coverage_and_sampling_errors() {
        let tables = TableSet::builtin(BuiltinTables::Chantler);
        let stack = LayerStack::new(vec![
            Layer::new(si(), 4.0, 0.0).unwrap(),
            Layer::substrate(si(), 0.0).unwrap(),
        ])
        .unwrap();
        let short = GridOptions {
            bottom_nm: Some(5.0),
            ..GridOptions::default()
        };
        assert!(matches!(
            discretize(&stack, None, &tables, 1300.0, &short),
            Err(Error::Coverage(_))
        ));
        let coarse = GridOptions {
            dz_nm: 0.5,
            q_max: Some(10.0),
            ..GridOptions::default()
        };
        assert!(matches!(
            discretize(&stack, None, &tables, 1300.0, &coarse),
            Err(Error::Sampling(_))
        ));
    }
}
