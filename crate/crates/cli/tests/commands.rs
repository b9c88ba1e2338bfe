use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rcxr_cli::files::read_curve;
use rcxr_cli::manifest::sha256_hex;

fn rcxr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcxr"))
        .args(args)
        .current_dir(dir)
        .env_remove("RCXR_TABLES_DIR")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn stack_config(depth_nm: f64, fwhm_nm: f64, n2d: f64) -> String {
    format!(
        r#"[[stack.layers]]
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
"#
    )
}

fn host_config() -> String {
    stack_config(18.1, 0.9, 1.0)
        .split("[delta]")
        .next()
        .unwrap()
        .to_owned()
}

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn toml_file(path: &Path) -> toml::Value {
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &toml::Value, path: &str) -> f64 {
    let mut cur = v;
    for key in path.split('.') {
        cur = &cur[key];
    }
    cur.as_float().unwrap_or_else(|| panic!("{path} is not a float: {cur}"))
}

fn simulate(dir: &Path, energy: &str, solver: &str, out: &str) -> PathBuf {
    ok(rcxr(
        dir,
        &["--config", "run.toml", "simulate", "--energy-ev", energy, "--solver", solver, "-o", out],
    ));
    dir.join(out)
}

#[test]
fn both_solvers_agree_above_three_inverse_nm() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    let born = read_curve(&simulate(w.path(), "1300", "born", "b.dat")).unwrap().curve;
    let dyn_ = read_curve(&simulate(w.path(), "1300", "dynamical", "d.dat")).unwrap().curve;
    assert_eq!(born.q, dyn_.q);
    for i in 0..born.q.len() {
        if born.q[i] >= 3.0 {
            let rel = (born.r[i] - dyn_.r[i]).abs() / dyn_.r[i];
            assert!(rel < 0.05, "Q = {}: {rel}", born.q[i]);
        }
    }
}

#[test]
fn born_grid_through_zero_is_rejected() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    let o = rcxr(w.path(), &["--config", "run.toml", "simulate", "--solver", "born", "--q-range", "0,5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("singularity"), "{}", stderr(&o));
}

#[test]
fn noisy_simulation_is_reproducible() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    let args = |out: &'static str| {
        vec!["--config", "run.toml", "--seed", "17", "simulate", "--incident-counts", "1e8", "-o", out]
    };
    ok(rcxr(w.path(), &args("a.dat")));
    std::fs::create_dir(w.path().join("again")).unwrap();
    ok(rcxr(w.path(), &args("again/a.dat")));
    let a = std::fs::read(w.path().join("a.dat")).unwrap();
    let b = std::fs::read(w.path().join("again/a.dat")).unwrap();
    assert_eq!(a, b);
    let c = read_curve(&w.path().join("a.dat")).unwrap();
    assert!(c.curve.sigma_r.is_some());
    assert_eq!(c.header.get("seed"), Some("17"));
}

#[test]
fn analyze_recovers_depth_and_thickness() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    simulate(w.path(), "1300", "dynamical", "c.dat");
    ok(rcxr(w.path(), &["analyze", "c.dat", "-o", "c.result.toml"]));
    let r = toml_file(&w.path().join("c.result.toml"));
    assert_eq!(r["fit"]["method"].as_str(), Some("single-energy"));
    assert!((num(&r, "fit.depth_nm.value") - 18.1).abs() < 0.3);
    assert!((num(&r, "fit.thickness_nm.value") / 0.9 - 1.0).abs() < 0.25);
    assert!(num(&r, "fit.depth_nm.lower") <= num(&r, "fit.depth_nm.value"));
    let profile = w.path().join(r["profile"]["file"].as_str().unwrap());
    assert!(std::fs::read_to_string(profile).unwrap().contains("# columns = z_nm re im magnitude"));
}

#[test]
fn host_only_curve_reports_no_layer() {
    let w = workspace(&host_config());
    simulate(w.path(), "1300", "dynamical", "h.dat");
    let o = rcxr(w.path(), &["analyze", "h.dat"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("peak/median"), "{}", stderr(&o));
}

#[test]
fn truncated_file_names_the_line() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    let path = simulate(w.path(), "1300", "dynamical", "c.dat");
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().take(40).collect();
    let cut = format!("{}\n{}", lines.join("\n"), "3.14 ");
    std::fs::write(w.path().join("cut.dat"), cut).unwrap();
    let o = rcxr(w.path(), &["analyze", "cut.dat"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cut.dat:41:"), "{}", stderr(&o));
}

#[test]
fn same_file_twice_fails_the_edge_check_first() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    simulate(w.path(), "1300", "dynamical", "c.dat");
    let o = rcxr(w.path(), &["diff-analyze", "c.dat", "c.dat"]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn difference_reports_tabulated_phase_shift() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    simulate(w.path(), "1300", "born", "lo.dat");
    simulate(w.path(), "1335", "born", "hi.dat");
    // argument order does not matter: curves are sorted by energy
    ok(rcxr(w.path(), &["--config", "run.toml", "diff-analyze", "hi.dat", "lo.dat", "-o", "d.toml"]));
    let r = toml_file(&w.path().join("d.toml"));
    assert_eq!(num(&r, "energy_below_ev"), 1300.0);
    assert!(num(&r, "phase.discrepancy_rad").abs() < 0.05 * std::f64::consts::PI);
    assert!((num(&r, "phase.predicted_shift_pi") - 0.33).abs() < 0.10);
    assert!((num(&r, "fit.depth_nm.value") - 18.1).abs() < 0.3);
}

#[test]
fn saturated_sample_thickness_falls_in_its_reported_band() {
    let w = workspace(&stack_config(17.9, 0.6, 1.6));
    simulate(w.path(), "1300", "dynamical", "lo.dat");
    simulate(w.path(), "1335", "dynamical", "hi.dat");
    ok(rcxr(w.path(), &["diff-analyze", "lo.dat", "hi.dat", "-o", "d.toml"]));
    let r = toml_file(&w.path().join("d.toml"));
    let fwhm = num(&r, "fit.fwhm_nm.value");
    assert!((0.4..=1.3).contains(&fwhm), "{fwhm}");
}

#[test]
fn resonance_inversion_paths() {
    let w = workspace(&stack_config(18.0, 1.6, 2.77));
    let o = ok(rcxr(
        w.path(),
        &["--config", "run.toml", "fit-resonance", "--contrast", "0.09", "--contrast-sigma", "0.01", "-o", "r.toml"],
    ));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FWHM"));
    let r = toml_file(&w.path().join("r.toml"));
    assert!((num(&r, "thickness_nm.value") - 1.6).abs() <= 0.5);
    assert_eq!(r["sweep"].as_array().unwrap().len(), 25);

    let o = rcxr(w.path(), &["--config", "run.toml", "fit-resonance", "--contrast", "0.09", "--n2d-per-nm2", "0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = rcxr(w.path(), &["--config", "run.toml", "fit-resonance", "--contrast", "3.0"]);
    assert_eq!(code(&o), 6, "{}", stderr(&o));
    assert!(stderr(&o).contains("band"), "{}", stderr(&o));
}

#[test]
fn scan_self_inversion() {
    let w = workspace(&stack_config(18.0, 1.6, 2.77));
    ok(rcxr(w.path(), &["--config", "run.toml", "simulate-scan", "-o", "scan.dat"]));
    ok(rcxr(w.path(), &["--config", "run.toml", "fit-resonance", "--scan", "scan.dat", "-o", "r.toml"]));
    let r = toml_file(&w.path().join("r.toml"));
    assert!((num(&r, "thickness_nm.value") / 1.6 - 1.0).abs() < 0.02);
    assert_eq!(r["input"].as_str(), Some("scan.dat"));
}

#[test]
fn suite_layout_and_control() {
    let w = workspace("");
    ok(rcxr(w.path(), &["synth-suite", "--seed", "3", "-o", "suite"]));
    let dir = w.path().join("suite");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 16, "{names:?}");
    assert_eq!(names.iter().filter(|n| n.ends_with(".truth.toml")).count(), 5);
    let truth = toml_file(&dir.join("sample4.truth.toml"));
    assert_eq!(num(&truth, "depth_nm"), 77.0);

    let o = rcxr(
        &dir,
        &["diff-analyze", "sample5-oxide_1300eV.dat", "sample5-oxide_1335eV.dat"],
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("no resonant signal"), "{}", stderr(&o));
}

#[test]
fn unwritable_suite_directory() {
    let w = workspace("");
    std::fs::write(w.path().join("blocker"), "x").unwrap();
    let o = rcxr(w.path(), &["synth-suite", "-o", "blocker/suite"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn schema_errors_name_the_key() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77).replace("roughness_nm = 0.1\n\n[delta]", "roughnes_nm = 0.1\n\n[delta]"));
    let o = rcxr(w.path(), &["--config", "run.toml", "simulate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stack.layers[1]"), "{}", stderr(&o));
    assert!(stderr(&o).contains("roughnes_nm"), "{}", stderr(&o));
}

#[test]
fn missing_tables_directory() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    let o = rcxr(w.path(), &["--config", "run.toml", "--tables-dir", "nowhere", "simulate"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_rcxr"))
        .args(["--config", "run.toml", "simulate"])
        .current_dir(w.path())
        .env("RCXR_TABLES_DIR", "also-nowhere")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn tables_directory_is_used_and_recorded() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    let tables = w.path().join("tables");
    std::fs::create_dir(&tables).unwrap();
    for el in ["As", "Si", "O"] {
        let text = rcxr_core::xsf::BuiltinTables::Henke.nff_text(el).unwrap();
        std::fs::write(tables.join(format!("{}.nff", el.to_lowercase())), text).unwrap();
    }
    ok(rcxr(w.path(), &["--config", "run.toml", "--tables-dir", "tables", "simulate", "-o", "c.dat"]));
    let m = toml_file(&w.path().join("c.manifest.toml"));
    let origins: Vec<&str> = m["tables"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["origin"].as_str().unwrap())
        .collect();
    assert!(origins.iter().all(|o| o.contains("tables/")), "{origins:?}");
}

#[test]
fn outputs_reference_their_manifest() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    simulate(w.path(), "1300", "dynamical", "c.dat");
    ok(rcxr(w.path(), &["--config", "run.toml", "analyze", "c.dat", "-o", "c.result.toml"]));
    let curve = read_curve(&w.path().join("c.dat")).unwrap();
    assert_eq!(curve.header.get("manifest"), Some("c.manifest.toml"));
    let result = toml_file(&w.path().join("c.result.toml"));
    assert_eq!(result["manifest"].as_str(), Some("c.result.manifest.toml"));

    let m = toml_file(&w.path().join("c.result.manifest.toml"));
    assert_eq!(m["command"].as_str(), Some("analyze"));
    for rec in m["outputs"].as_array().unwrap().iter().chain(m["inputs"].as_array().unwrap()) {
        let path = w.path().join(rec["path"].as_str().unwrap());
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(rec["sha256"].as_str().unwrap(), sha256_hex(&bytes), "{}", path.display());
    }
    let profile = std::fs::read_to_string(w.path().join("c.result.profile.dat")).unwrap();
    assert!(profile.contains("# manifest = c.result.manifest.toml"));
    assert!(m["config"]["analysis"]["window_q_per_nm"].is_array());
}

#[test]
fn theta_abscissa_round_trip() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    ok(rcxr(
        w.path(),
        &["--config", "run.toml", "simulate", "--abscissa", "theta-deg", "-o", "t.dat"],
    ));
    let c = read_curve(&w.path().join("t.dat")).unwrap();
    assert_eq!(c.header.get("abscissa"), Some("theta_deg"));
    assert!((c.curve.q[0] - 0.5).abs() < 1e-9);
    ok(rcxr(w.path(), &["analyze", "t.dat", "-o", "t.toml"]));
    let r = toml_file(&w.path().join("t.toml"));
    assert!((num(&r, "fit.depth_nm.value") - 18.1).abs() < 0.3);
}

#[test]
fn clipped_window_warns() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    simulate(w.path(), "1300", "dynamical", "c.dat");
    let o = ok(rcxr(w.path(), &["analyze", "c.dat", "--window", "1.5,8", "-o", "c.toml"]));
    assert!(stderr(&o).contains("clipped"), "{}", stderr(&o));
    let r = toml_file(&w.path().join("c.toml"));
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(r["fit"]["window_q_per_nm"][1].as_float(), Some(5.5));
}

#[test]
fn cutoff_beyond_the_layer_is_rejected() {
    let w = workspace(&stack_config(18.1, 0.9, 2.77));
    simulate(w.path(), "1300", "dynamical", "c.dat");
    let o = rcxr(w.path(), &["analyze", "c.dat", "--cutoff-nm", "25"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}
