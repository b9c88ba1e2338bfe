//! Acceptance checks. One PASS/FAIL line per criterion with the measured
//! values and wall time; exits nonzero when any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcxr_core::extract::{envelope_value, fit_envelope, EnvelopeModel, Method};
use rcxr_core::forward::{
    dynamical_reflectivity, fresnel_reflectance, linspace, q_from_theta, Solver,
};
use rcxr_core::model::{DeltaLayerSpec, GridOptions, LayerStack};
use rcxr_core::numfit::{central_difference_jacobian, fft, ifft, Residuals};
use rcxr_core::samples::{oxidized_silicon, reference_corpus, silicon, REFERENCE_N2D};
use rcxr_core::xsf::{refractive_index, BuiltinTables, TableSet, TableSource};

const PI: f64 = std::f64::consts::PI;
const BELOW_EV: f64 = 1300.0;
const ABOVE_EV: f64 = 1335.0;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tables() -> TableSet {
    TableSet::builtin(BuiltinTables::Chantler)
}

fn rcxr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcxr"))
        .args(args)
        .current_dir(dir)
        .env_remove("RCXR_TABLES_DIR")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let o = rcxr(dir, args);
    if o.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`rcxr {}` exited {:?}: {}",
            args.join(" "),
            o.status.code(),
            String::from_utf8_lossy(&o.stderr).trim()
        ))
    }
}

fn read_toml(path: &Path) -> std::result::Result<toml::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn num(v: &toml::Value, path: &str) -> std::result::Result<f64, String> {
    let mut cur = v;
    for key in path.split('.') {
        cur = cur.get(key).ok_or_else(|| format!("missing {path}"))?;
    }
    cur.as_float().ok_or_else(|| format!("{path} is not a number"))
}

/// 1 nm SiO₂ on Si, σ_r 0.1 nm, Gaussian As layer.
fn stack_config(depth_nm: f64, fwhm_nm: f64, n2d: f64) -> String {
    format!(
        r#"[analysis]
window_q_per_nm = [1.5, 5.0]

[[stack.layers]]
composition = {{ Si = 22.05, O = 44.1 }}
thickness_nm = 1.0
roughness_nm = 0.1

[[stack.layers]]
composition = {{ Si = 50.0 }}
roughness_nm = 0.1

[delta]
depth_nm = {depth_nm}
fwhm_nm = {fwhm_nm}
n2d_per_nm2 = {n2d}

[resonance]
theta_deg = 10.0
"#
    )
}

fn workspace(config: &str) -> std::result::Result<tempfile::TempDir, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("run.toml"), config).map_err(|e| e.to_string())?;
    Ok(dir)
}

struct Reconstruction {
    depth_nm: f64,
    fwhm_nm: f64,
    peak_nm: f64,
    resolution_nm: f64,
}

fn reconstruction(r: &toml::Value) -> std::result::Result<Reconstruction, String> {
    Ok(Reconstruction {
        depth_nm: num(r, "fit.depth_nm.value")?,
        fwhm_nm: num(r, "fit.fwhm_nm.value")?,
        peak_nm: num(r, "profile.peak_depth_nm")?,
        resolution_nm: num(r, "profile.resolution_nm")?,
    })
}

/// Noiseless dynamical curves of the 18.1 nm reference stack, analyzed both ways.
fn analyze_reference(dir: &Path) -> std::result::Result<(Reconstruction, Reconstruction), String> {
    for e in ["1300", "1335"] {
        let out = format!("c{e}.dat");
        run_ok(dir, &["--config", "run.toml", "simulate", "--energy-ev", e, "-o", &out])?;
    }
    run_ok(dir, &["--config", "run.toml", "analyze", "c1300.dat", "-o", "single.toml"])?;
    run_ok(
        dir,
        &["--config", "run.toml", "diff-analyze", "c1300.dat", "c1335.dat", "-o", "diff.toml"],
    )?;
    Ok((
        reconstruction(&read_toml(&dir.join("single.toml"))?)?,
        reconstruction(&read_toml(&dir.join("diff.toml"))?)?,
    ))
}

fn phase_shift() -> Check {
    let set = TableSet::load(&TableSource::Builtin(BuiltinTables::Chantler), ["As", "Si"])
        .map_err(|e| e.to_string())?;
    let below = set.delta_f("As", "Si", BELOW_EV).map_err(|e| e.to_string())?;
    let above = set.delta_f("As", "Si", ABOVE_EV).map_err(|e| e.to_string())?;
    let shift = (above.arg() - below.arg()) / PI;
    ensure((shift - 0.33).abs() <= 0.10, format!("shift {shift:.4}π, target 0.33π ± 0.10π"))
}

fn oracle_equivalence() -> Check {
    let t = tables();
    let sample = &reference_corpus()[0];
    let stack = sample.stack().map_err(|e| e.to_string())?;
    let delta = sample.delta().map_err(|e| e.to_string())?;
    let q = linspace(3.0, 5.0, 400);
    let grid = GridOptions::default();
    let born = Solver::Born
        .simulate(&stack, delta.as_ref(), &t, BELOW_EV, &q, &grid)
        .map_err(|e| e.to_string())?;
    let dynamical = Solver::Dynamical
        .simulate(&stack, delta.as_ref(), &t, BELOW_EV, &q, &grid)
        .map_err(|e| e.to_string())?;
    let worst_born = born
        .r
        .iter()
        .zip(&dynamical.r)
        .map(|(b, d)| (b - d).abs() / d)
        .fold(0.0, f64::max);

    let substrate = LayerStack::substrate_only(silicon(), 0.0).map_err(|e| e.to_string())?;
    let n = refractive_index(&silicon(), &t, BELOW_EV).map_err(|e| e.to_string())?;
    let thetas = [0.5, 1.0, 3.0, 10.0, 30.0, 60.0];
    let qs: Vec<f64> = thetas.iter().map(|th| q_from_theta(*th, BELOW_EV).unwrap()).collect();
    let c = dynamical_reflectivity(&substrate, None, &t, BELOW_EV, &qs).map_err(|e| e.to_string())?;
    let mut worst_fresnel = 0.0f64;
    for (th, r) in thetas.iter().zip(&c.r) {
        let f = fresnel_reflectance(Complex64::new(1.0, 0.0), n, *th).map_err(|e| e.to_string())?;
        worst_fresnel = worst_fresnel.max((r - f).abs() / f);
    }
    ensure(
        worst_born < 0.05 && worst_fresnel <= 1e-12,
        format!(
            "Born/dynamical max rel {worst_born:.4} (< 0.05), Fresnel max rel {worst_fresnel:.1e} (≤ 1e-12)"
        ),
    )
}

fn single_energy_round_trip() -> Check {
    let w = workspace(&stack_config(18.1, 0.9, REFERENCE_N2D))?;
    run_ok(w.path(), &["--config", "run.toml", "simulate", "--energy-ev", "1300", "-o", "c.dat"])?;
    run_ok(w.path(), &["--config", "run.toml", "analyze", "c.dat", "-o", "c.toml"])?;
    let r = reconstruction(&read_toml(&w.path().join("c.toml"))?)?;
    ensure(
        (r.depth_nm - 18.1).abs() <= 0.3 && (r.fwhm_nm / 0.9 - 1.0).abs() <= 0.25,
        format!("d = {:.3} nm (18.1 ± 0.3), FWHM = {:.3} nm (0.9 ± 25%)", r.depth_nm, r.fwhm_nm),
    )
}

fn difference_round_trip() -> Check {
    let w = workspace(&stack_config(18.1, 0.9, REFERENCE_N2D))?;
    for e in ["1300", "1335"] {
        let out = format!("c{e}.dat");
        run_ok(w.path(), &["--config", "run.toml", "simulate", "--energy-ev", e, "-o", &out])?;
    }
    run_ok(w.path(), &["--config", "run.toml", "diff-analyze", "c1300.dat", "c1335.dat", "-o", "d.toml"])?;
    let r = read_toml(&w.path().join("d.toml"))?;
    let depth = num(&r, "fit.depth_nm.value")?;
    let fwhm = num(&r, "fit.fwhm_nm.value")?;
    let (lo, hi) = (num(&r, "fit.fwhm_nm.lower")?, num(&r, "fit.fwhm_nm.upper")?);

    run_ok(w.path(), &["--seed", "5", "synth-suite", "-o", "suite"])?;
    let suite = w.path().join("suite");
    let control = rcxr(&suite, &["diff-analyze", "sample5-oxide_1300eV.dat", "sample5-oxide_1335eV.dat"]);
    let control_code = control.status.code();
    ensure(
        (depth - 18.1).abs() <= 0.3
            && (fwhm / 0.9 - 1.0).abs() <= 0.25
            && lo <= fwhm
            && fwhm <= hi
            && control_code == Some(4),
        format!(
            "d = {depth:.3} nm, FWHM = {fwhm:.3} nm [{lo:.3}, {hi:.3}], host-only control exit {control_code:?} (want 4)"
        ),
    )
}

fn resonance_inversion() -> Check {
    let w = workspace(&stack_config(18.0, 1.6, REFERENCE_N2D))?;
    run_ok(w.path(), &["--config", "run.toml", "simulate-scan", "--theta-deg", "10", "-o", "scan.dat"])?;
    run_ok(w.path(), &["--config", "run.toml", "fit-resonance", "--scan", "scan.dat", "-o", "r.toml"])?;
    let r = read_toml(&w.path().join("r.toml"))?;
    let contrast = num(&r, "measured_contrast")?;
    let fwhm = num(&r, "thickness_nm.value")?;
    let points = r.get("sweep").and_then(|s| s.as_array()).map_or(0, Vec::len);
    ensure(
        (contrast - 0.09).abs() <= 0.03 && (fwhm / 1.6 - 1.0).abs() <= 0.02 && points == 25,
        format!(
            "ΔR/R = {contrast:.4} (0.09 ± 0.03), self-inverted FWHM = {fwhm:.4} nm (1.6 ± 2%), {points}-point sweep"
        ),
    )
}

fn profile_reconstruction() -> Check {
    let w = workspace(&stack_config(18.1, 0.9, REFERENCE_N2D))?;
    let (single, diff) = analyze_reference(w.path())?;
    let resolution = single.resolution_nm.max(diff.resolution_nm);
    let gap = (single.peak_nm - diff.peak_nm).abs();
    ensure(
        (single.peak_nm - 18.0).abs() <= 1.5 && (diff.peak_nm - 18.0).abs() <= 1.5 && gap <= resolution,
        format!(
            "peaks {:.3} / {:.3} nm (18 ± 1.5), gap {gap:.3} nm vs resolution {resolution:.3} nm",
            single.peak_nm, diff.peak_nm
        ),
    )
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

/// Sub-sample positions of the local maxima of Q²·y.
fn maxima(q: &[f64], y: &[f64]) -> Vec<f64> {
    let f: Vec<f64> = q.iter().zip(y).map(|(q, v)| q * q * v).collect();
    let dq = q[1] - q[0];
    (1..f.len() - 1)
        .filter(|&i| f[i] > f[i - 1] && f[i] >= f[i + 1])
        .map(|i| {
            let den = f[i - 1] - 2.0 * f[i] + f[i + 1];
            q[i] + 0.5 * dq * (f[i - 1] - f[i + 1]) / den
        })
        .collect()
}

fn property_suite() -> Check {
    let t = tables();
    let grid = GridOptions::default();
    let born = |stack: &LayerStack, delta: Option<&DeltaLayerSpec>, e: f64, q: &[f64]| {
        Solver::Born.simulate(stack, delta, &t, e, q, &grid).map(|c| c.r)
    };
    let mut failures = Vec::new();
    let mut notes = Vec::new();

    let sharp = LayerStack::substrate_only(silicon(), 0.0).map_err(|e| e.to_string())?;
    let q = linspace(2.0, 5.0, 60);
    let r = born(&sharp, None, BELOW_EV, &q).map_err(|e| e.to_string())?;
    let slope = log_slope(&q, &r);
    notes.push(format!("Porod slope {slope:.4}"));
    if (slope + 4.0).abs() > 0.04 {
        failures.push("Porod slope");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut parseval = 0.0f64;
    let mut round_trip = 0.0f64;
    for _ in 0..64 {
        let n = rng.gen_range(2..1100);
        let y: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)))
            .collect();
        let spectrum = fft(&y);
        let e_time: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        let e_freq: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        parseval = parseval.max((e_time - e_freq).abs() / e_time);
        let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let back = ifft(&spectrum);
        for (a, b) in y.iter().zip(&back) {
            round_trip = round_trip.max((a - b).norm() / scale);
        }
    }
    notes.push(format!("Parseval {parseval:.1e}, FFT round trip {round_trip:.1e}"));
    if parseval > 1e-10 {
        failures.push("Parseval");
    }
    if round_trip > 1e-12 {
        failures.push("FFT round trip");
    }

    let truth = [0.02, 0.9 / 2.354_82, 18.1, 1.1];
    let qe = linspace(1.5, 5.0, 600);
    let signal: Vec<f64> = qe
        .iter()
        .map(|v| envelope_value(&truth, *v) + rng.gen_range(-5e-4..5e-4))
        .collect();
    let fit = fit_envelope(&qe, &signal, &vec![1.0; qe.len()], Method::SingleEnergy, 18.0)
        .map_err(|e| e.to_string())?;
    let mut points = vec![[fit.amplitude.value, fit.sigma_nm.value, fit.depth_nm.value, fit.phase_rad.value]];
    for _ in 0..16 {
        points.push([
            rng.gen_range(1e-3..0.1),
            rng.gen_range(0.05..2.0),
            rng.gen_range(8.0..80.0),
            rng.gen_range(-6.0..6.0),
        ]);
    }
    let model = EnvelopeModel { q: &qe, signal: &signal };
    let mut jacobian = 0.0f64;
    for p in &points {
        let analytic = model.jacobian(p).ok_or("envelope model has no analytic Jacobian")?;
        let numeric = central_difference_jacobian(&model, p);
        for j in 0..4 {
            let norm = analytic.column(j).norm();
            if norm > 1e-8 {
                jacobian = jacobian.max((analytic.column(j) - numeric.column(j)).norm() / norm);
            }
        }
    }
    notes.push(format!("LM Jacobian {jacobian:.1e}"));
    if jacobian > 1e-5 {
        failures.push("Jacobian");
    }

    let rough = LayerStack::substrate_only(silicon(), 0.1).map_err(|e| e.to_string())?;
    let a = dynamical_reflectivity(&sharp, None, &t, BELOW_EV, &[5.0]).map_err(|e| e.to_string())?.r[0];
    let b = dynamical_reflectivity(&rough, None, &t, BELOW_EV, &[5.0]).map_err(|e| e.to_string())?.r[0];
    let damping = b / a;
    notes.push(format!("roughness damping {damping:.5}"));
    if (damping - (-0.25f64).exp()).abs() > 1e-3 {
        failures.push("roughness damping");
    }

    let depth = 18.1;
    let period = 2.0 * PI / depth;
    let stack = oxidized_silicon(1.0, 0.1).map_err(|e| e.to_string())?;
    let delta = DeltaLayerSpec::gaussian_fwhm(depth, 0.9, REFERENCE_N2D, "As", "Si")
        .map_err(|e| e.to_string())?;
    let doubled = delta.with_n2d(2.0 * delta.n2d_per_nm2).map_err(|e| e.to_string())?;
    let qi = linspace(1.5, 5.0, 3500);
    let base = born(&stack, None, ABOVE_EV, &qi).map_err(|e| e.to_string())?;
    let interference = |d: &DeltaLayerSpec| -> std::result::Result<Vec<f64>, String> {
        let with = born(&stack, Some(d), ABOVE_EV, &qi).map_err(|e| e.to_string())?;
        Ok(qi.iter().zip(with.iter().zip(&base)).map(|(q, (a, b))| q * q * (a - b)).collect())
    };
    let once = maxima(&qi, &interference(&delta)?);
    let twice = maxima(&qi, &interference(&doubled)?);
    let mut shift = 0.0f64;
    let mut paired = 0;
    for x in &once {
        let nearest = twice.iter().min_by(|u, v| (*u - x).abs().total_cmp(&(*v - x).abs()));
        if let Some(y) = nearest {
            if (y - x).abs() < 0.5 * period {
                shift = shift.max((y - x).abs());
                paired += 1;
            }
        }
    }
    notes.push(format!("extrema shift {:.2e} of 2π/d over {paired} maxima", shift / period));
    if shift >= 0.01 * period || paired < 9 {
        failures.push("extrema invariance");
    }

    let detail = notes.join(", ");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failed: {}", failures.join(", ")))
    }
}

fn suite_determinism() -> Check {
    let w = workspace("")?;
    run_ok(w.path(), &["--seed", "42", "synth-suite", "-o", "first"])?;
    run_ok(w.path(), &["--seed", "42", "synth-suite", "-o", "second"])?;
    let listing = |dir: &Path| -> std::result::Result<Vec<String>, String> {
        let mut names: Vec<String> = std::fs::read_dir(dir)
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| e.to_string())?;
        names.sort();
        Ok(names)
    };
    let (a, b) = (w.path().join("first"), w.path().join("second"));
    let names = listing(&a)?;
    if names != listing(&b)? {
        return Err("file sets differ".into());
    }
    let mut bytes = 0;
    for name in &names {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{name} differs"));
        }
        bytes += x.len();
    }
    Ok(format!("{} files, {bytes} bytes identical", names.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("phase-shift prediction", Duration::from_secs(1), phase_shift),
        ("Born/dynamical/Fresnel equivalence", Duration::from_secs(5), oracle_equivalence),
        ("single-energy round trip", Duration::from_secs(10), single_energy_round_trip),
        ("resonant-difference round trip", Duration::from_secs(10), difference_round_trip),
        ("resonance inversion", Duration::from_secs(60), resonance_inversion),
        ("profile reconstruction", Duration::from_secs(10), profile_reconstruction),
        ("property suite", Duration::from_secs(120), property_suite),
        ("synthetic-suite determinism", Duration::from_secs(60), suite_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail} [{:.2} s, budget {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" },
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
