//! Command-line workflows: simulate reflectivity curves and energy scans,
//! analyze single-energy and resonant pairs, invert resonance contrast, and
//! generate a reproducible synthetic corpus.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | internal failure (fit did not run, panic) |
//! | 2 | invalid input: config schema, data-file parse, precondition, singular Q grid |
//! | 3 | scattering-factor tables missing or unreadable, energy outside a table, I/O failure |
//! | 4 | no δ-layer or no resonant signal detected |
//! | 5 | both curves lie on the same side of the absorption edge |
//! | 6 | measured contrast outside the simulated band |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod manifest;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{GlobalOptions, ResonanceArgs, Session, SimulateArgs};
use crate::config::{Abscissa, SolverName};
pub use crate::error::{CliError, Result};

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected LO,HI, got {s:?}"));
    };
    let lo: f64 = a.parse().map_err(|_| format!("cannot read {a:?} as a number"))?;
    let hi: f64 = b.parse().map_err(|_| format!("cannot read {b:?} as a number"))?;
    if !(hi > lo) {
        return Err(format!("upper end {hi} must exceed lower end {lo}"));
    }
    Ok([lo, hi])
}

#[derive(Debug, Parser)]
#[command(name = "rcxr", version, about = "δ-layer X-ray reflectometry: simulation and inversion")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory of `<element>.nff` tables; overrides RCXR_TABLES_DIR and the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub tables_dir: Option<PathBuf>,
    /// Analysis Q window, nm⁻¹.
    #[arg(long, global = true, value_name = "LO,HI", value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<[f64; 2]>,
    /// Low-pass cutoff depth, nm.
    #[arg(long, global = true, value_name = "NM")]
    pub cutoff_nm: Option<f64>,
    /// Noise seed, 0 ≤ seed < 2⁶³.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub solver: Option<SolverName>,
    /// Output file, or directory for synth-suite.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate R(Q) of the configured stack.
    Simulate {
        #[arg(long)]
        energy_ev: Option<f64>,
        /// nm⁻¹.
        #[arg(long, value_name = "LO,HI", value_parser = parse_pair, allow_hyphen_values = true)]
        q_range: Option<[f64; 2]>,
        #[arg(long)]
        points: Option<usize>,
        /// Photons per point for Poisson noise; noiseless when absent.
        #[arg(long)]
        incident_counts: Option<f64>,
        #[arg(long, value_enum)]
        abscissa: Option<Abscissa>,
    },
    /// Simulate R(E) at a fixed angle across the configured energy range.
    SimulateScan {
        #[arg(long)]
        theta_deg: Option<f64>,
    },
    /// Single-energy Fourier-filter analysis of one curve.
    Analyze { curve: PathBuf },
    /// Resonant-difference analysis of a curve pair straddling the edge.
    DiffAnalyze { first: PathBuf, second: PathBuf },
    /// Invert a fixed-angle resonance contrast into a δ-layer thickness.
    FitResonance {
        /// Energy-scan file to measure ΔR/R from.
        #[arg(long, value_name = "FILE")]
        scan: Option<PathBuf>,
        /// Measured ΔR/R.
        #[arg(long)]
        contrast: Option<f64>,
        #[arg(long)]
        contrast_sigma: Option<f64>,
        #[arg(long)]
        n2d_per_nm2: Option<f64>,
        #[arg(long)]
        depth_nm: Option<f64>,
        #[arg(long)]
        theta_deg: Option<f64>,
    },
    /// Write noisy 1300/1335 eV curves and truth files for the five reference samples.
    SynthSuite,
}

impl Cli {
    fn globals(&self) -> GlobalOptions {
        GlobalOptions {
            config: self.config.clone(),
            tables_dir: self.tables_dir.clone(),
            window: self.window,
            cutoff_nm: self.cutoff_nm,
            seed: self.seed,
            solver: self.solver,
            output: self.output.clone(),
        }
    }
}

/// Runs one parsed command line; returns the main output path.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let mut session = Session::open(&cli.globals())?;
    match &cli.command {
        Command::Simulate {
            energy_ev,
            q_range,
            points,
            incident_counts,
            abscissa,
        } => commands::simulate(
            &mut session,
            &SimulateArgs {
                energy_ev: *energy_ev,
                q_range: *q_range,
                points: *points,
                incident_counts: *incident_counts,
                abscissa: *abscissa,
            },
        ),
        Command::SimulateScan { theta_deg } => commands::simulate_scan(&session, *theta_deg),
        Command::Analyze { curve } => commands::analyze(&session, curve),
        Command::DiffAnalyze { first, second } => commands::diff_analyze(&session, first, second),
        Command::FitResonance {
            scan,
            contrast,
            contrast_sigma,
            n2d_per_nm2,
            depth_nm,
            theta_deg,
        } => commands::fit_resonance(
            &session,
            &ResonanceArgs {
                scan: scan.clone(),
                contrast: *contrast,
                contrast_sigma: *contrast_sigma,
                n2d_per_nm2: *n2d_per_nm2,
                depth_nm: *depth_nm,
                theta_deg: *theta_deg,
            },
        ),
        Command::SynthSuite => commands::synth_suite(&session),
    }
}

/// Full error text including nested causes.
pub fn describe(e: &CliError) -> String {
    use std::error::Error as _;
    let mut text = e.to_string();
    let mut source = e.source();
    while let Some(s) = source {
        let msg = s.to_string();
        if !text.contains(&msg) {
            text.push_str(": ");
            text.push_str(&msg);
        }
        source = s.source();
    }
    text
}
