use std::path::{Path, PathBuf};

use rcxr_core::extract::{
    analyze_difference, analyze_single_energy, contrast, predicted_phase_shift,
    thickness_from_resonance, AnalysisOptions,
};
use rcxr_core::forward::{
    add_counting_noise, linspace, simulate_energy_scan, ReflectivityCurve, Solver,
};
use rcxr_core::model::GridOptions;
use rcxr_core::samples::{reference_corpus, SampleKind, SampleSpec};
use rcxr_core::xsf::{TableSource, TABLES_DIR_ENV};
use serde::Serialize;

use crate::config::{Abscissa, Config, ContrastName, LayerConfig, SolverName};
use crate::error::{CliError, Result};
use crate::files::{format_curve, format_scan, read_curve, read_scan, Header};
use crate::manifest::{load_tables, manifest_path_for, sha256_hex, LoadedTables, Run};
use crate::report::{
    format_profile, to_toml, DifferenceReport, ResonanceReport, SingleEnergyReport,
};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub config: Option<PathBuf>,
    pub tables_dir: Option<PathBuf>,
    pub window: Option<[f64; 2]>,
    pub cutoff_nm: Option<f64>,
    pub seed: Option<u64>,
    pub solver: Option<SolverName>,
    pub output: Option<PathBuf>,
}

/// Configuration after command-line overrides, plus its source file.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: Config,
    pub config_file: Option<(PathBuf, Vec<u8>)>,
    pub tables_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
    label: String,
}

impl Session {
    pub fn open(g: &GlobalOptions) -> Result<Self> {
        let (mut config, config_file, label) = match &g.config {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
                let cfg = Config::load(path)?;
                (cfg, Some((path.clone(), bytes)), path.display().to_string())
            }
            None => (Config::default(), None, "built-in defaults".to_owned()),
        };
        if let Some(w) = g.window {
            config.analysis.window_q_per_nm = w;
        }
        if let Some(c) = g.cutoff_nm {
            config.analysis.cutoff_nm = Some(c);
        }
        if let Some(s) = g.seed {
            config.simulate.seed = s;
        }
        if let Some(s) = g.solver {
            config.simulate.solver = s;
        }
        config.validate("command line")?;
        Ok(Self {
            config,
            config_file,
            tables_dir: g.tables_dir.clone(),
            output: g.output.clone(),
            label,
        })
    }

    /// `--tables-dir`, then `[tables] dir`, then the environment variable,
    /// then the configured bundled set.
    pub fn table_source(&self) -> TableSource {
        if let Some(dir) = &self.tables_dir {
            return TableSource::Directory(dir.clone());
        }
        if let Some(dir) = &self.config.tables.dir {
            return TableSource::Directory(dir.clone());
        }
        match std::env::var_os(TABLES_DIR_ENV) {
            Some(dir) if !dir.is_empty() => TableSource::Directory(PathBuf::from(dir)),
            _ => TableSource::Builtin(self.config.tables.set.into()),
        }
    }

    pub fn tables(&self, elements: &[String]) -> Result<LoadedTables> {
        load_tables(&self.table_source(), elements)
    }

    fn run(&self, command: &str, manifest: &Path, seed: Option<u64>) -> Run {
        let mut run = Run::new(command, manifest, &self.config, seed);
        if let Some((path, bytes)) = &self.config_file {
            run.add_input("config", path, bytes);
        }
        run
    }

    fn output_or(&self, default: impl Into<PathBuf>) -> PathBuf {
        self.output.clone().unwrap_or_else(|| default.into())
    }
}

fn warn(warnings: &mut Vec<String>, message: String) {
    eprintln!("warning: {message}");
    warnings.push(message);
}

/// Clips the configured window to `q_range`, warning about each change.
fn clip_window(
    window: [f64; 2],
    q_range: (f64, f64),
    unreliable_below: Option<f64>,
    warnings: &mut Vec<String>,
) -> Result<(f64, f64)> {
    let lo = window[0].max(q_range.0);
    let hi = window[1].min(q_range.1);
    if !(hi > lo) {
        return Err(CliError::Precondition(format!(
            "window [{}, {}] nm⁻¹ does not overlap the data range [{}, {}] nm⁻¹",
            window[0], window[1], q_range.0, q_range.1
        )));
    }
    if lo != window[0] || hi != window[1] {
        warn(
            warnings,
            format!(
                "window [{}, {}] nm⁻¹ clipped to the data range: [{lo}, {hi}] nm⁻¹",
                window[0], window[1]
            ),
        );
    }
    if let Some(q) = unreliable_below {
        if lo < q {
            warn(
                warnings,
                format!("window starts at {lo} nm⁻¹, below the {q} nm⁻¹ reliability limit of the input"),
            );
        }
    }
    Ok((lo, hi))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Forward-simulation overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub energy_ev: Option<f64>,
    pub q_range: Option<[f64; 2]>,
    pub points: Option<usize>,
    pub incident_counts: Option<f64>,
    pub abscissa: Option<Abscissa>,
}

fn simulate_curve(
    s: &Session,
    solver: Solver,
    spec: (&rcxr_core::model::LayerStack, Option<&rcxr_core::model::DeltaLayerSpec>),
    tables: &LoadedTables,
    energy_ev: f64,
    q: &[f64],
) -> Result<ReflectivityCurve> {
    let grid = GridOptions {
        dz_nm: s.config.simulate.grid_dz_nm,
        ..GridOptions::default()
    };
    solver
        .simulate(spec.0, spec.1, &tables.set, energy_ev, q, &grid)
        .map_err(|e| CliError::core(format!("{} simulation at {energy_ev} eV", solver.name()), e))
}

pub fn simulate(s: &mut Session, args: &SimulateArgs) -> Result<PathBuf> {
    let sim = &mut s.config.simulate;
    if let Some(e) = args.energy_ev {
        sim.energy_ev = e;
    }
    if let Some(q) = args.q_range {
        sim.q_range_per_nm = q;
    }
    if let Some(n) = args.points {
        sim.points = n;
    }
    if args.incident_counts.is_some() {
        sim.incident_counts = args.incident_counts;
    }
    if let Some(a) = args.abscissa {
        sim.abscissa = a;
    }
    s.config.validate("command line")?;
    let stack = s.config.stack(&s.label)?;
    let delta = s.config.delta(&s.label)?;
    let tables = s.tables(&s.config.elements())?;
    let sim = s.config.simulate.clone();
    let q = linspace(sim.q_range_per_nm[0], sim.q_range_per_nm[1], sim.points);
    let solver: Solver = sim.solver.into();
    let mut curve = simulate_curve(s, solver, (&stack, delta.as_ref()), &tables, sim.energy_ev, &q)?;
    if let Some(i0) = sim.incident_counts {
        curve = add_counting_noise(&curve, i0, sim.seed)
            .map_err(|e| CliError::core("counting noise", e))?;
    }

    let out = s.output_or(format!("curve_{}eV.dat", sim.energy_ev));
    let mut run = s.run("simulate", &manifest_path_for(&out), Some(sim.seed));
    run.add_tables(&tables.records);
    let mut header = Header::default();
    header.set("solver", solver.name());
    if let Some(i0) = sim.incident_counts {
        header.set("incident_counts", i0);
        header.set("seed", sim.seed);
    }
    header.set("manifest", run.reference());
    let text = format_curve(&curve, sim.abscissa, &header)?;
    run.write_output("curve", &out, &text)?;
    let manifest = run.finish()?;
    println!(
        "wrote {} ({} points, {} solver, {} eV); manifest {}",
        out.display(),
        curve.len(),
        solver.name(),
        sim.energy_ev,
        manifest.display()
    );
    Ok(out)
}

pub fn simulate_scan(s: &Session, theta_deg: Option<f64>) -> Result<PathBuf> {
    let stack = s.config.stack(&s.label)?;
    let delta = s.config.delta(&s.label)?;
    let tables = s.tables(&s.config.elements())?;
    let theta = theta_deg.unwrap_or(s.config.resonance.theta_deg);
    let energies = s.config.scan_energies();
    let scan = simulate_energy_scan(&stack, delta.as_ref(), &tables.set, theta, &energies)
        .map_err(|e| CliError::core("energy scan", e))?;
    let out = s.output_or(format!("scan_{theta}deg.dat"));
    let mut run = s.run("simulate-scan", &manifest_path_for(&out), None);
    run.add_tables(&tables.records);
    let mut header = Header::default();
    header.set("solver", "dynamical");
    header.set("manifest", run.reference());
    run.write_output("energy-scan", &out, &format_scan(&scan, &header))?;
    let manifest = run.finish()?;
    println!(
        "wrote {} ({} energies at {theta}°); manifest {}",
        out.display(),
        energies.len(),
        manifest.display()
    );
    Ok(out)
}

fn analysis_options(s: &Session, window: (f64, f64)) -> AnalysisOptions {
    AnalysisOptions {
        window,
        ..s.config.analysis_options()
    }
}

pub fn analyze(s: &Session, curve_path: &Path) -> Result<PathBuf> {
    let bytes = std::fs::read(curve_path).map_err(|e| CliError::io(curve_path, e))?;
    let file = read_curve(curve_path)?;
    let mut warnings = Vec::new();
    let window = clip_window(
        s.config.analysis.window_q_per_nm,
        file.curve.q_range(),
        file.curve.unreliable_below_q,
        &mut warnings,
    )?;
    let analysis = analyze_single_energy(&file.curve, &analysis_options(s, window))
        .map_err(|e| CliError::core(format!("single-energy analysis of {}", curve_path.display()), e))?;

    let out = s.output_or(sibling(curve_path, ".result.toml"));
    let profile_path = sibling(&out, ".profile.dat");
    let mut run = s.run("analyze", &manifest_path_for(&out), None);
    run.add_input("curve", curve_path, &bytes);
    let report = SingleEnergyReport::new(
        &analysis,
        s.config.analysis.thickness_convention,
        run.reference(),
        file_name(curve_path),
        file_name(&profile_path),
        warnings,
    );
    run.write_output("profile", &profile_path, &format_profile(&analysis.profile, &run.reference()))?;
    run.write_output("result", &out, &to_toml(&report))?;
    run.finish()?;
    let r = &report.fit;
    println!(
        "d = {:.3} nm [{:.3}, {:.3}], {} = {:.3} nm [{:.3}, {:.3}] ({}); wrote {}",
        r.depth_nm.value,
        r.depth_nm.lower,
        r.depth_nm.upper,
        r.thickness_convention,
        r.thickness_nm.value,
        r.thickness_nm.lower,
        r.thickness_nm.upper,
        r.thickness_interval,
        out.display()
    );
    Ok(out)
}

pub fn diff_analyze(s: &Session, first: &Path, second: &Path) -> Result<PathBuf> {
    let a_bytes = std::fs::read(first).map_err(|e| CliError::io(first, e))?;
    let b_bytes = std::fs::read(second).map_err(|e| CliError::io(second, e))?;
    let a = read_curve(first)?;
    let b = read_curve(second)?;
    let ((below, below_path, below_bytes), (above, above_path, above_bytes)) =
        if a.curve.energy_ev <= b.curve.energy_ev {
            ((a, first, a_bytes), (b, second, b_bytes))
        } else {
            ((b, second, b_bytes), (a, first, a_bytes))
        };
    let edge = s.config.analysis.edge_ev;
    let (eb, ea) = (below.curve.energy_ev, above.curve.energy_ev);
    if !(eb < edge && ea > edge) {
        return Err(CliError::SameSideOfEdge {
            below_ev: eb,
            above_ev: ea,
            edge_ev: edge,
        });
    }
    let mut warnings = Vec::new();
    let [cb, ca] = s.config.analysis.energies_ev;
    if (eb - cb).abs() > 1.0 || (ea - ca).abs() > 1.0 {
        warn(
            &mut warnings,
            format!("curve energies {eb}/{ea} eV differ from the configured pair {cb}/{ca} eV"),
        );
    }
    let (b0, b1) = below.curve.q_range();
    let (a0, a1) = above.curve.q_range();
    let unreliable = match (below.curve.unreliable_below_q, above.curve.unreliable_below_q) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    let window = clip_window(
        s.config.analysis.window_q_per_nm,
        (b0.max(a0), b1.min(a1)),
        unreliable,
        &mut warnings,
    )?;
    let (dopant, host) = (&s.config.analysis.dopant, &s.config.analysis.host);
    let tables = s.tables(&[dopant.clone(), host.clone()])?;
    let predicted = predicted_phase_shift(&tables.set, dopant, host, eb, ea)
        .map_err(CliError::Tables)?;
    let analysis = analyze_difference(&below.curve, &above.curve, &analysis_options(s, window))
        .map_err(|e| CliError::core("resonant-difference analysis", e))?;

    let out = s.output_or(sibling(below_path, ".diff.toml"));
    let profile_path = sibling(&out, ".profile.dat");
    let mut run = s.run("diff-analyze", &manifest_path_for(&out), None);
    run.add_input("curve-below-edge", below_path, &below_bytes);
    run.add_input("curve-above-edge", above_path, &above_bytes);
    run.add_tables(&tables.records);
    let report = DifferenceReport::new(
        &analysis,
        s.config.analysis.thickness_convention,
        predicted,
        edge,
        run.reference(),
        [file_name(below_path), file_name(above_path)],
        file_name(&profile_path),
        warnings,
    );
    run.write_output("profile", &profile_path, &format_profile(&analysis.profile, &run.reference()))?;
    run.write_output("result", &out, &to_toml(&report))?;
    run.finish()?;
    let r = &report.fit;
    println!(
        "d = {:.3} nm [{:.3}, {:.3}], {} = {:.3} nm [{:.3}, {:.3}] ({}); phase shift {:.3}π measured, {:.3}π predicted; wrote {}",
        r.depth_nm.value,
        r.depth_nm.lower,
        r.depth_nm.upper,
        r.thickness_convention,
        r.thickness_nm.value,
        r.thickness_nm.lower,
        r.thickness_nm.upper,
        r.thickness_interval,
        report.phase.measured_shift_pi,
        report.phase.predicted_shift_pi,
        out.display()
    );
    Ok(out)
}

/// Inputs of the resonance inversion; unset fields fall back to the config.
#[derive(Debug, Clone, Default)]
pub struct ResonanceArgs {
    pub scan: Option<PathBuf>,
    pub contrast: Option<f64>,
    pub contrast_sigma: Option<f64>,
    pub n2d_per_nm2: Option<f64>,
    pub depth_nm: Option<f64>,
    pub theta_deg: Option<f64>,
}

pub fn fit_resonance(s: &Session, args: &ResonanceArgs) -> Result<PathBuf> {
    let cfg = &s.config;
    let n2d = args
        .n2d_per_nm2
        .or(cfg.resonance.n2d_per_nm2)
        .or(cfg.delta.as_ref().map(|d| d.n2d_per_nm2))
        .ok_or_else(|| CliError::Precondition("areal density unknown: pass --n2d-per-nm2 or set resonance.n2d_per_nm2".into()))?;
    if !(n2d > 0.0 && n2d.is_finite()) {
        return Err(CliError::Precondition(format!(
            "areal density must be > 0 for a resonance inversion, got {n2d}"
        )));
    }
    let depth = args
        .depth_nm
        .or(cfg.resonance.depth_nm)
        .or(cfg.delta.as_ref().map(|d| d.depth_nm))
        .ok_or_else(|| CliError::Precondition("layer depth unknown: pass --depth-nm or set resonance.depth_nm".into()))?;

    let scan = args.scan.as_deref().map(|p| -> Result<_> {
        let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
        Ok((p, bytes, read_scan(p)?))
    }).transpose()?;
    let theta = args
        .theta_deg
        .or(scan.as_ref().map(|(_, _, f)| f.scan.theta_deg))
        .unwrap_or(cfg.resonance.theta_deg);
    let setup = cfg.resonance_setup(&s.label, n2d, depth, theta)?;
    let (measured, mut sigma) = match (&scan, args.contrast) {
        (Some((p, _, f)), None) => contrast(&f.scan, &setup.contrast)
            .map_err(|e| CliError::core(format!("contrast of {}", p.display()), e))?,
        (None, Some(v)) => (v, None),
        (Some(_), Some(_)) => {
            return Err(CliError::Precondition("give either --scan or --contrast, not both".into()))
        }
        (None, None) => {
            return Err(CliError::Precondition("need a measured contrast: --scan FILE or --contrast VALUE".into()))
        }
    };
    if args.contrast_sigma.is_some() {
        sigma = args.contrast_sigma;
    }
    let mut elements = setup.stack.elements();
    elements.push(setup.dopant.clone());
    elements.push(setup.host.clone());
    let tables = s.tables(&elements)?;
    let estimate = thickness_from_resonance(measured, sigma, &setup, &tables.set)
        .map_err(|e| CliError::core("resonance inversion", e))?;

    let out = s.output_or(match &scan {
        Some((p, _, _)) => sibling(p, ".thickness.toml"),
        None => PathBuf::from("resonance.thickness.toml"),
    });
    let mut run = s.run("fit-resonance", &manifest_path_for(&out), None);
    if let Some((p, bytes, _)) = &scan {
        run.add_input("energy-scan", p, bytes);
    }
    run.add_tables(&tables.records);
    let definition = match cfg.resonance.contrast {
        ContrastName::PeakToPeak => "peak-to-peak",
        ContrastName::WindowMeans => "window-means",
    };
    let report = ResonanceReport::new(
        &estimate,
        definition,
        theta,
        n2d,
        depth,
        run.reference(),
        scan.as_ref().map(|(p, _, _)| file_name(p)),
    );
    run.write_output("result", &out, &to_toml(&report))?;
    run.finish()?;
    println!(
        "ΔR/R = {:.4} → FWHM = {:.3} nm [{:.3}, {:.3}] (band {:.4}..{:.4}); wrote {}",
        measured,
        estimate.thickness_nm,
        estimate.lower_nm,
        estimate.upper_nm,
        estimate.band.0,
        estimate.band.1,
        out.display()
    );
    Ok(out)
}

/// Photon count used by the synthetic corpus when none is configured.
pub const SUITE_INCIDENT_COUNTS: f64 = 1e10;

/// Noise seed of one dataset, derived from the suite seed. Kept below 2⁶³
/// so it fits a TOML integer.
pub fn dataset_seed(seed: u64, label: &str, energy_ev: f64) -> u64 {
    let digest = sha256_hex(format!("{seed}/{label}/{energy_ev}").as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex digest") >> 1
}

#[derive(Debug, Serialize)]
struct TruthDataset {
    file: String,
    energy_ev: f64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct Truth {
    manifest: String,
    label: String,
    kind: String,
    depth_nm: f64,
    oxide_nm: f64,
    roughness_nm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fwhm_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n2d_per_nm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sheet_nm: Option<f64>,
    solver: String,
    incident_counts: f64,
    datasets: Vec<TruthDataset>,
    layers: Vec<LayerConfig>,
}

fn truth_layers(sample: &SampleSpec) -> Result<Vec<LayerConfig>> {
    let stack = sample
        .stack()
        .map_err(|e| CliError::core(format!("stack of {}", sample.label), e))?;
    Ok(stack
        .layers()
        .iter()
        .map(|l| LayerConfig {
            composition: l
                .material
                .components()
                .iter()
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            thickness_nm: match l.thickness {
                rcxr_core::model::Thickness::Finite(t) => Some(t),
                rcxr_core::model::Thickness::SemiInfinite => None,
            },
            roughness_nm: l.roughness_nm,
        })
        .collect())
}

pub fn synth_suite(s: &Session) -> Result<PathBuf> {
    let dir = s.output_or("synth-suite");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let elements: Vec<String> = ["As", "Si", "O"].iter().map(|e| e.to_string()).collect();
    let tables = s.tables(&elements)?;
    let sim = &s.config.simulate;
    let solver: Solver = sim.solver.into();
    let i0 = sim.incident_counts.unwrap_or(SUITE_INCIDENT_COUNTS);
    let q = linspace(sim.q_range_per_nm[0], sim.q_range_per_nm[1], sim.points);
    let mut run = s.run("synth-suite", &dir.join("suite.manifest.toml"), Some(sim.seed));
    run.add_tables(&tables.records);
    let reference = run.reference();
    for sample in reference_corpus() {
        let stack = sample
            .stack()
            .map_err(|e| CliError::core(format!("stack of {}", sample.label), e))?;
        let delta = sample
            .delta()
            .map_err(|e| CliError::core(format!("δ-layer of {}", sample.label), e))?;
        let mut datasets = Vec::new();
        for &energy in &s.config.analysis.energies_ev {
            let clean = simulate_curve(s, solver, (&stack, delta.as_ref()), &tables, energy, &q)?;
            let seed = dataset_seed(sim.seed, &sample.label, energy);
            let noisy = add_counting_noise(&clean, i0, seed)
                .map_err(|e| CliError::core("counting noise", e))?;
            let name = format!("{}_{}eV.dat", sample.label, energy);
            let mut header = Header::default();
            header.set("sample", &sample.label);
            header.set("solver", solver.name());
            header.set("incident_counts", i0);
            header.set("seed", seed);
            header.set("manifest", &reference);
            let text = format_curve(&noisy, sim.abscissa, &header)?;
            run.write_output("curve", &dir.join(&name), &text)?;
            datasets.push(TruthDataset {
                file: name,
                energy_ev: energy,
                seed,
            });
        }
        let (kind, fwhm, n2d, sheet) = match sample.kind {
            SampleKind::ArsenicDelta {
                fwhm_nm,
                n2d_per_nm2,
            } => ("arsenic-delta", Some(fwhm_nm), Some(n2d_per_nm2), None),
            SampleKind::BuriedOxide { sheet_nm } => ("buried-oxide", None, None, Some(sheet_nm)),
        };
        let truth = Truth {
            manifest: reference.clone(),
            label: sample.label.clone(),
            kind: kind.into(),
            depth_nm: sample.depth_nm,
            oxide_nm: sample.oxide_nm,
            roughness_nm: sample.roughness_nm,
            fwhm_nm: fwhm,
            sigma_nm: delta.as_ref().and_then(|d| d.shape.sigma_nm()),
            n2d_per_nm2: n2d,
            sheet_nm: sheet,
            solver: solver.name().into(),
            incident_counts: i0,
            datasets,
            layers: truth_layers(&sample)?,
        };
        let name = format!("{}.truth.toml", sample.label);
        run.write_output("truth", &dir.join(name), &to_toml(&truth))?;
    }
    let manifest = run.finish()?;
    println!(
        "wrote {} datasets for 5 samples to {}; manifest {}",
        2 * 5,
        dir.display(),
        manifest.display()
    );
    Ok(dir)
}
