//! TOML run configuration.
//!
//! Every key carries its unit in the name. Unknown keys are rejected and
//! errors name the offending key path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rcxr_core::extract::{AnalysisOptions, ContrastDefinition, ResonanceSetup};
use rcxr_core::forward::Solver;
use rcxr_core::model::{DeltaLayerSpec, DeltaShape, Layer, LayerStack};
use rcxr_core::xsf::{BuiltinTables, Material};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub tables: TablesConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<StackConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaConfig>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub resonance: ResonanceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableSetName {
    #[default]
    Chantler,
    Henke,
}

impl From<TableSetName> for BuiltinTables {
    fn from(v: TableSetName) -> Self {
        match v {
            TableSetName::Chantler => BuiltinTables::Chantler,
            TableSetName::Henke => BuiltinTables::Henke,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesConfig {
    /// Directory of `<element>.nff` files, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Bundled tabulation used when no directory is given.
    #[serde(default)]
    pub set: TableSetName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThicknessConvention {
    #[default]
    Fwhm,
    Sigma,
}

impl ThicknessConvention {
    pub fn tag(self) -> &'static str {
        match self {
            ThicknessConvention::Fwhm => "fwhm",
            ThicknessConvention::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_window")]
    pub window_q_per_nm: [f64; 2],
    /// Fixed low-pass cutoff; when absent, min(10 nm, d/2) from the FFT depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Below- and above-edge energies of a resonant pair.
    #[serde(default = "default_energies")]
    pub energies_ev: [f64; 2],
    #[serde(default = "default_edge")]
    pub edge_ev: f64,
    #[serde(default)]
    pub thickness_convention: ThicknessConvention,
    #[serde(default = "default_dopant")]
    pub dopant: String,
    #[serde(default = "default_host")]
    pub host: String,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_q_per_nm: default_window(),
            cutoff_nm: None,
            grid_points: None,
            energies_ev: default_energies(),
            edge_ev: default_edge(),
            thickness_convention: ThicknessConvention::default(),
            dopant: default_dopant(),
            host: default_host(),
        }
    }
}

fn default_window() -> [f64; 2] {
    [1.5, 5.0]
}
fn default_energies() -> [f64; 2] {
    [1300.0, 1335.0]
}
fn default_edge() -> f64 {
    1324.0
}
fn default_dopant() -> String {
    "As".into()
}
fn default_host() -> String {
    "Si".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    /// Surface first; the last layer omits `thickness_nm` and is the substrate.
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    /// Element symbol to atoms/nm³.
    pub composition: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_nm: Option<f64>,
    #[serde(default)]
    pub roughness_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Dirac,
    #[default]
    Gaussian,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaConfig {
    pub depth_nm: f64,
    #[serde(default)]
    pub shape: ShapeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_nm: Option<f64>,
    pub n2d_per_nm2: f64,
    #[serde(default = "default_dopant")]
    pub dopant: String,
    #[serde(default = "default_host")]
    pub host: String,
    /// Tabulated shape abscissa, symmetric about 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_nm: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_per_nm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    Born,
    #[default]
    Dynamical,
}

impl From<SolverName> for Solver {
    fn from(v: SolverName) -> Self {
        match v {
            SolverName::Born => Solver::Born,
            SolverName::Dynamical => Solver::Dynamical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    #[default]
    QPerNm,
    ThetaDeg,
}

impl Abscissa {
    pub fn key(self) -> &'static str {
        match self {
            Abscissa::QPerNm => "q_per_nm",
            Abscissa::ThetaDeg => "theta_deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_sim_energy")]
    pub energy_ev: f64,
    #[serde(default = "default_q_range")]
    pub q_range_per_nm: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub solver: SolverName,
    /// Incident photons per point; noiseless when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident_counts: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub abscissa: Abscissa,
    #[serde(default = "default_dz")]
    pub grid_dz_nm: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            energy_ev: default_sim_energy(),
            q_range_per_nm: default_q_range(),
            points: default_points(),
            solver: SolverName::default(),
            incident_counts: None,
            seed: 0,
            abscissa: Abscissa::default(),
            grid_dz_nm: default_dz(),
        }
    }
}

fn default_sim_energy() -> f64 {
    1300.0
}
fn default_q_range() -> [f64; 2] {
    [0.5, 5.5]
}
fn default_points() -> usize {
    1000
}
fn default_dz() -> f64 {
    0.02
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContrastName {
    #[default]
    PeakToPeak,
    WindowMeans,
}

impl From<ContrastName> for ContrastDefinition {
    fn from(v: ContrastName) -> Self {
        match v {
            ContrastName::PeakToPeak => ContrastDefinition::default(),
            ContrastName::WindowMeans => ContrastDefinition::window_means(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default = "default_theta")]
    pub theta_deg: f64,
    /// Falls back to `[delta]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2d_per_nm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_nm: Option<f64>,
    #[serde(default)]
    pub contrast: ContrastName,
    #[serde(default = "default_thickness_range")]
    pub thickness_range_nm: [f64; 2],
    #[serde(default = "default_thickness_points")]
    pub thickness_points: usize,
    #[serde(default = "default_energy_range")]
    pub energy_range_ev: [f64; 2],
    #[serde(default = "default_energy_step")]
    pub energy_step_ev: f64,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        Self {
            theta_deg: default_theta(),
            n2d_per_nm2: None,
            depth_nm: None,
            contrast: ContrastName::default(),
            thickness_range_nm: default_thickness_range(),
            thickness_points: default_thickness_points(),
            energy_range_ev: default_energy_range(),
            energy_step_ev: default_energy_step(),
        }
    }
}

fn default_theta() -> f64 {
    10.0
}
fn default_thickness_range() -> [f64; 2] {
    [0.2, 5.0]
}
fn default_thickness_points() -> usize {
    25
}
fn default_energy_range() -> [f64; 2] {
    [1310.0, 1342.0]
}
fn default_energy_step() -> f64 {
    1.0
}

fn schema(file: &str, key: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Schema {
        file: file.to_owned(),
        key: key.into(),
        message: message.into(),
    }
}

impl Config {
    /// Parses TOML text; `file` labels error messages.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let inner = e.into_inner();
            schema(file, if key == "." { "(root)".into() } else { key }, inner.message().trim())
        })?;
        cfg.validate(file)?;
        Ok(cfg)
    }

    /// Reads a config file; table directories are resolved against its parent.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(dir) = &cfg.tables.dir {
            if dir.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new(""));
                cfg.tables.dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }

    /// Range checks serde cannot express.
    pub fn validate(&self, file: &str) -> Result<()> {
        let a = &self.analysis;
        check_window(file, "analysis.window_q_per_nm", a.window_q_per_nm)?;
        if let Some(c) = a.cutoff_nm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(schema(file, "analysis.cutoff_nm", "must be > 0"));
            }
        }
        if !(a.energies_ev[0] > 0.0 && a.energies_ev[1] > 0.0) {
            return Err(schema(file, "analysis.energies_ev", "energies must be > 0"));
        }
        let s = &self.simulate;
        if !(s.q_range_per_nm[1] > s.q_range_per_nm[0]) {
            return Err(schema(file, "simulate.q_range_per_nm", "upper end must exceed lower end"));
        }
        if s.points < 2 {
            return Err(schema(file, "simulate.points", "need at least 2 points"));
        }
        if let Some(i0) = s.incident_counts {
            if !(i0 > 0.0 && i0.is_finite()) {
                return Err(schema(file, "simulate.incident_counts", "must be > 0"));
            }
        }
        if !(s.grid_dz_nm > 0.0) {
            return Err(schema(file, "simulate.grid_dz_nm", "must be > 0"));
        }
        let r = &self.resonance;
        if !(r.thickness_range_nm[0] > 0.0 && r.thickness_range_nm[1] > r.thickness_range_nm[0]) {
            return Err(schema(file, "resonance.thickness_range_nm", "need 0 < min < max"));
        }
        if r.thickness_points < 2 {
            return Err(schema(file, "resonance.thickness_points", "need at least 2 points"));
        }
        if !(r.energy_step_ev > 0.0 && r.energy_range_ev[1] > r.energy_range_ev[0]) {
            return Err(schema(file, "resonance.energy_range_ev", "need min < max and a positive step"));
        }
        if let Some(stack) = &self.stack {
            stack.build(file)?;
        }
        if let Some(delta) = &self.delta {
            delta.build(file)?;
        }
        Ok(())
    }

    pub fn stack(&self, file: &str) -> Result<LayerStack> {
        self.stack
            .as_ref()
            .ok_or_else(|| schema(file, "stack", "this command needs a [stack] section"))?
            .build(file)
    }

    pub fn delta(&self, file: &str) -> Result<Option<DeltaLayerSpec>> {
        self.delta.as_ref().map(|d| d.build(file)).transpose()
    }

    /// Elements whose tables a forward simulation of this config needs.
    pub fn elements(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut add = |s: &str| {
            if !out.iter().any(|e| e == s) {
                out.push(s.to_owned());
            }
        };
        if let Some(stack) = &self.stack {
            for layer in &stack.layers {
                for el in layer.composition.keys() {
                    add(el);
                }
            }
        }
        if let Some(d) = &self.delta {
            add(&d.dopant);
            add(&d.host);
        }
        add(&self.analysis.dopant);
        add(&self.analysis.host);
        out
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let a = &self.analysis;
        AnalysisOptions {
            window: (a.window_q_per_nm[0], a.window_q_per_nm[1]),
            points: a.grid_points,
            cutoff_nm: a.cutoff_nm,
            ..AnalysisOptions::default()
        }
    }

    /// Energies from `resonance.energy_range_ev` in `energy_step_ev` steps.
    pub fn scan_energies(&self) -> Vec<f64> {
        let r = &self.resonance;
        let n = ((r.energy_range_ev[1] - r.energy_range_ev[0]) / r.energy_step_ev + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| r.energy_range_ev[0] + i as f64 * r.energy_step_ev)
            .collect()
    }

    /// Sweep setup for the resonance inversion.
    pub fn resonance_setup(
        &self,
        file: &str,
        n2d_per_nm2: f64,
        depth_nm: f64,
        theta_deg: f64,
    ) -> Result<ResonanceSetup> {
        let stack = self.stack(file)?;
        let (dopant, host) = match &self.delta {
            Some(d) => (d.dopant.as_str(), d.host.as_str()),
            None => (self.analysis.dopant.as_str(), self.analysis.host.as_str()),
        };
        let mut setup = ResonanceSetup::new(stack, n2d_per_nm2, depth_nm, theta_deg, dopant, host)
            .map_err(|e| CliError::core("resonance setup", e))?;
        let r = &self.resonance;
        setup.contrast = r.contrast.into();
        setup.thickness_grid = (r.thickness_range_nm[0], r.thickness_range_nm[1], r.thickness_points);
        setup.energies_ev = self.scan_energies();
        Ok(setup)
    }

    /// TOML text of the effective configuration.
    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn check_window(file: &str, key: &str, w: [f64; 2]) -> Result<()> {
    if !(w[0] > 0.0 && w[1] > w[0] && w[1].is_finite()) {
        return Err(schema(file, key, format!("need 0 < lo < hi, got [{}, {}]", w[0], w[1])));
    }
    Ok(())
}

impl StackConfig {
    pub fn build(&self, file: &str) -> Result<LayerStack> {
        if self.layers.is_empty() {
            return Err(schema(file, "stack.layers", "at least the substrate is required"));
        }
        let last = self.layers.len() - 1;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let key = |field: &str| format!("stack.layers[{i}].{field}");
            let material = Material::new(l.composition.iter().map(|(k, v)| (k.as_str(), *v)))
                .map_err(|e| schema(file, key("composition"), e.to_string()))?;
            let layer = match (l.thickness_nm, i == last) {
                (None, true) => Layer::substrate(material, l.roughness_nm),
                (Some(t), false) => Layer::new(material, t, l.roughness_nm),
                (Some(_), true) => {
                    return Err(schema(
                        file,
                        key("thickness_nm"),
                        "the last layer is the semi-infinite substrate and takes no thickness",
                    ))
                }
                (None, false) => {
                    return Err(schema(file, key("thickness_nm"), "required for all but the last layer"))
                }
            };
            layers.push(layer.map_err(|e| {
                let field = if e.to_string().contains("roughness") { "roughness_nm" } else { "thickness_nm" };
                schema(file, key(field), e.to_string())
            })?);
        }
        LayerStack::new(layers).map_err(|e| schema(file, "stack.layers", e.to_string()))
    }
}

impl DeltaConfig {
    pub fn build(&self, file: &str) -> Result<DeltaLayerSpec> {
        let shape = match self.shape {
            ShapeName::Dirac => DeltaShape::Dirac,
            ShapeName::Gaussian => match (self.fwhm_nm, self.sigma_nm) {
                (Some(f), None) => DeltaShape::gaussian_fwhm(f)
                    .map_err(|e| schema(file, "delta.fwhm_nm", e.to_string()))?,
                (None, Some(s)) => DeltaShape::gaussian(s)
                    .map_err(|e| schema(file, "delta.sigma_nm", e.to_string()))?,
                (Some(_), Some(_)) => {
                    return Err(schema(file, "delta.sigma_nm", "give fwhm_nm or sigma_nm, not both"))
                }
                (None, None) => {
                    return Err(schema(file, "delta.fwhm_nm", "gaussian shape needs fwhm_nm or sigma_nm"))
                }
            },
            ShapeName::Tabulated => {
                let z = self
                    .z_nm
                    .clone()
                    .ok_or_else(|| schema(file, "delta.z_nm", "tabulated shape needs z_nm"))?;
                let h = self
                    .h_per_nm
                    .clone()
                    .ok_or_else(|| schema(file, "delta.h_per_nm", "tabulated shape needs h_per_nm"))?;
                DeltaShape::tabulated(z, h).map_err(|e| schema(file, "delta.h_per_nm", e.to_string()))?
            }
        };
        DeltaLayerSpec::new(self.depth_nm, shape, self.n2d_per_nm2, &self.dopant, &self.host).map_err(|e| {
            let field = if e.to_string().contains("depth") { "depth_nm" } else { "n2d_per_nm2" };
            schema(file, format!("delta.{field}"), e.to_string())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[analysis]
window_q_per_nm = [1.5, 5.0]

[[stack.layers]]
composition = { Si = 22.05, O = 44.1 }
thickness_nm = 1.0
roughness_nm = 0.1

[[stack.layers]]
composition = { Si = 50.0 }
roughness_nm = 0.1

[delta]
depth_nm = 18.1
fwhm_nm = 0.9
n2d_per_nm2 = 2.77
"#;

    #[test]
    fn parses_sample_config() {
        let cfg = Config::parse(SAMPLE, "t.toml").unwrap();
        let stack = cfg.stack("t.toml").unwrap();
        assert_eq!(stack.layers().len(), 2);
        let delta = cfg.delta("t.toml").unwrap().unwrap();
        assert!((delta.fwhm_nm().unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(cfg.analysis.energies_ev, [1300.0, 1335.0]);
        assert_eq!(cfg.elements(), ["O", "Si", "As"]);
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = SAMPLE.replace("fwhm_nm = 0.9", "fwhm_nm = 0.9\nwidth = 3");
        let e = Config::parse(&text, "t.toml").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("delta"), "{e}");
        assert!(e.to_string().contains("width"), "{e}");
    }

    #[test]
    fn type_error_reports_nested_path() {
        let text = SAMPLE.replace("thickness_nm = 1.0", "thickness_nm = \"thick\"");
        let e = Config::parse(&text, "t.toml").unwrap_err();
        assert!(e.to_string().contains("stack.layers[0].thickness_nm"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let text = SAMPLE.replace("roughness_nm = 0.1\n\n[[", "roughness_nm = -0.1\n\n[[");
        let e = Config::parse(&text, "t.toml").unwrap_err();
        assert!(e.to_string().contains("stack.layers[0].roughness_nm"), "{e}");
        let text = SAMPLE.replace("n2d_per_nm2 = 2.77", "n2d_per_nm2 = -1");
        let e = Config::parse(&text, "t.toml").unwrap_err();
        assert!(e.to_string().contains("delta.n2d_per_nm2"), "{e}");
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = Config::parse(SAMPLE, "t.toml").unwrap();
        let back = Config::parse(&cfg.snapshot(), "snap.toml").unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn scan_energies_include_both_ends() {
        let e = Config::default().scan_energies();
        assert_eq!(e.len(), 33);
        assert_eq!(e[0], 1310.0);
        assert_eq!(e[32], 1342.0);
    }
}
