//! Reference materials and Si:As test structures.

use crate::error::Result;
use crate::model::{DeltaLayerSpec, Layer, LayerStack};
use crate::xsf::Material;

/// Crystalline silicon, atoms/nm³.
pub const SI_DENSITY: f64 = 50.0;
/// Si and O densities of thermal oxide (2.2 g/cm³), atoms/nm³.
pub const SIO2_DENSITIES: (f64, f64) = (22.05, 44.1);
/// Areal As density of the measured reference sample, atoms/nm².
pub const REFERENCE_N2D: f64 = 2.77;
/// Saturation As density after AsH₃ dosing, atoms/nm².
pub const SATURATION_N2D: f64 = 1.6;

pub fn silicon() -> Material {
    Material::new([("Si", SI_DENSITY)]).expect("positive density")
}

pub fn silicon_dioxide() -> Material {
    Material::new([("Si", SIO2_DENSITIES.0), ("O", SIO2_DENSITIES.1)]).expect("positive densities")
}

/// Native oxide on a silicon substrate, equal roughness on both interfaces.
pub fn oxidized_silicon(oxide_nm: f64, roughness_nm: f64) -> Result<LayerStack> {
    LayerStack::new(vec![
        Layer::new(silicon_dioxide(), oxide_nm, roughness_nm)?,
        Layer::substrate(silicon(), roughness_nm)?,
    ])
}

/// Oxide cap, silicon spacer, a buried oxide sheet centred at `depth_nm`, silicon substrate.
pub fn buried_oxide(
    oxide_nm: f64,
    depth_nm: f64,
    sheet_nm: f64,
    roughness_nm: f64,
) -> Result<LayerStack> {
    let spacer = depth_nm - 0.5 * sheet_nm - oxide_nm;
    LayerStack::new(vec![
        Layer::new(silicon_dioxide(), oxide_nm, roughness_nm)?,
        Layer::new(silicon(), spacer, roughness_nm)?,
        Layer::new(silicon_dioxide(), sheet_nm, roughness_nm)?,
        Layer::substrate(silicon(), roughness_nm)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleKind {
    /// Gaussian As δ-layer in silicon.
    ArsenicDelta { fwhm_nm: f64, n2d_per_nm2: f64 },
    /// Thin SiO₂ sheet buried in silicon; no As resonance.
    BuriedOxide { sheet_nm: f64 },
}

/// One structure of the synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub label: String,
    pub depth_nm: f64,
    pub oxide_nm: f64,
    pub roughness_nm: f64,
    pub kind: SampleKind,
}

impl SampleSpec {
    pub fn arsenic(label: &str, depth_nm: f64, fwhm_nm: f64, n2d_per_nm2: f64) -> Self {
        Self {
            label: label.into(),
            depth_nm,
            oxide_nm: 1.0,
            roughness_nm: 0.1,
            kind: SampleKind::ArsenicDelta {
                fwhm_nm,
                n2d_per_nm2,
            },
        }
    }

    pub fn stack(&self) -> Result<LayerStack> {
        match self.kind {
            SampleKind::ArsenicDelta { .. } => oxidized_silicon(self.oxide_nm, self.roughness_nm),
            SampleKind::BuriedOxide { sheet_nm } => {
                buried_oxide(self.oxide_nm, self.depth_nm, sheet_nm, self.roughness_nm)
            }
        }
    }

    pub fn delta(&self) -> Result<Option<DeltaLayerSpec>> {
        match self.kind {
            SampleKind::ArsenicDelta {
                fwhm_nm,
                n2d_per_nm2,
            } => Ok(Some(DeltaLayerSpec::gaussian_fwhm(
                self.depth_nm,
                fwhm_nm,
                n2d_per_nm2,
                "As",
                "Si",
            )?)),
            SampleKind::BuriedOxide { .. } => Ok(None),
        }
    }
}

/// Analogs of the five measured samples: four As δ-layers and a buried-oxide control.
pub fn reference_corpus() -> Vec<SampleSpec> {
    vec![
        SampleSpec::arsenic("sample1", 16.8, 0.8, REFERENCE_N2D),
        SampleSpec::arsenic("sample2", 17.9, 0.6, SATURATION_N2D),
        SampleSpec::arsenic("sample3", 32.0, 1.4, SATURATION_N2D),
        SampleSpec::arsenic("sample4", 77.0, 1.2, SATURATION_N2D),
        SampleSpec {
            label: "sample5-oxide".into(),
            depth_nm: 15.3,
            oxide_nm: 1.0,
            roughness_nm: 0.1,
            kind: SampleKind::BuriedOxide { sheet_nm: 1.0 },
        },
    ]
}
