use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{simulate_energy_scan, EnergyScan};
use crate::model::{DeltaLayerSpec, LayerStack};
use crate::numfit::{interp_linear, Pchip};
use crate::xsf::TableSet;

/// How the relative reflectivity change across the edge is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContrastDefinition {
    /// [max R − min R] over [from_ev, to_ev], divided by R(reference_ev).
    PeakToPeak {
        from_ev: f64,
        to_ev: f64,
        reference_ev: f64,
    },
    /// |mean R above − mean R below|/mean R below over two energy windows,
    /// with the spread of each window propagated into an uncertainty. The
    /// sign depends on where the angle sits on a fringe, so only the size
    /// is kept.
    WindowMeans {
        below_ev: (f64, f64),
        above_ev: (f64, f64),
    },
}

impl Default for ContrastDefinition {
    fn default() -> Self {
        ContrastDefinition::PeakToPeak {
            from_ev: 1320.0,
            to_ev: 1340.0,
            reference_ev: 1320.0,
        }
    }
}

impl ContrastDefinition {
    pub fn window_means() -> Self {
        ContrastDefinition::WindowMeans {
            below_ev: (1312.0, 1322.0),
            above_ev: (1330.0, 1340.0),
        }
    }

    /// Energy range a scan must cover.
    pub fn coverage(&self) -> (f64, f64) {
        match *self {
            ContrastDefinition::PeakToPeak {
                from_ev,
                to_ev,
                reference_ev,
            } => (from_ev.min(reference_ev), to_ev.max(reference_ev)),
            ContrastDefinition::WindowMeans { below_ev, above_ev } => {
                (below_ev.0.min(above_ev.0), below_ev.1.max(above_ev.1))
            }
        }
    }
}

fn window_values(scan: &EnergyScan, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let v: Vec<f64> = scan
        .energy_ev
        .iter()
        .zip(&scan.r)
        .filter(|(e, _)| **e >= lo && **e <= hi)
        .map(|(_, r)| *r)
        .collect();
    if v.len() < 2 {
        return Err(Error::Range(format!(
            "scan has {} points in [{lo}, {hi}] eV, need at least 2",
            v.len()
        )));
    }
    Ok(v)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// ΔR/R of an energy scan and, for window means, its standard uncertainty.
pub fn contrast(scan: &EnergyScan, def: &ContrastDefinition) -> Result<(f64, Option<f64>)> {
    match *def {
        ContrastDefinition::PeakToPeak {
            from_ev,
            to_ev,
            reference_ev,
        } => {
            let v = window_values(scan, from_ev, to_ev)?;
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let reference = interp_linear(&scan.energy_ev, &scan.r, reference_ev).ok_or_else(|| {
                Error::Range(format!("reference energy {reference_ev} eV outside the scan"))
            })?;
            if !(reference > 0.0) {
                return Err(Error::Domain("reference reflectivity is zero".into()));
            }
            Ok(((max - min) / reference, None))
        }
        ContrastDefinition::WindowMeans { below_ev, above_ev } => {
            let (mb, sb) = mean_std(&window_values(scan, below_ev.0, below_ev.1)?);
            let (ma, sa) = mean_std(&window_values(scan, above_ev.0, above_ev.1)?);
            if !(mb > 0.0) {
                return Err(Error::Domain("mean reflectivity below the edge is zero".into()));
            }
            let sigma = ((sa / mb).powi(2) + (ma * sb / (mb * mb)).powi(2)).sqrt();
            Ok(((ma - mb).abs() / mb, Some(sigma)))
        }
    }
}

/// Fixed-angle sample description for the thickness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSetup {
    pub stack: LayerStack,
    pub n2d_per_nm2: f64,
    pub depth_nm: f64,
    pub theta_deg: f64,
    pub dopant: String,
    pub host: String,
    pub contrast: ContrastDefinition,
    /// Log-spaced FWHM grid: (min, max, points).
    pub thickness_grid: (f64, f64, usize),
    pub energies_ev: Vec<f64>,
}

impl ResonanceSetup {
    pub fn new(
        stack: LayerStack,
        n2d_per_nm2: f64,
        depth_nm: f64,
        theta_deg: f64,
        dopant: &str,
        host: &str,
    ) -> Result<Self> {
        if !(n2d_per_nm2 > 0.0) {
            return Err(Error::Domain(format!("areal density must be > 0, got {n2d_per_nm2}")));
        }
        if !(depth_nm > 0.0) {
            return Err(Error::Domain(format!("depth must be > 0, got {depth_nm}")));
        }
        Ok(Self {
            stack,
            n2d_per_nm2,
            depth_nm,
            theta_deg,
            dopant: dopant.to_owned(),
            host: host.to_owned(),
            contrast: ContrastDefinition::default(),
            thickness_grid: (0.2, 5.0, 25),
            energies_ev: (1310..=1342).map(f64::from).collect(),
        })
    }

    pub fn thicknesses(&self) -> Vec<f64> {
        let (lo, hi, n) = self.thickness_grid;
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    /// Simulated ΔR/R for a Gaussian layer of FWHM `thickness_nm`.
    pub fn simulate(&self, tables: &TableSet, thickness_nm: f64) -> Result<f64> {
        let delta = DeltaLayerSpec::gaussian_fwhm(
            self.depth_nm,
            thickness_nm,
            self.n2d_per_nm2,
            &self.dopant,
            &self.host,
        )?;
        let scan = simulate_energy_scan(
            &self.stack,
            Some(&delta),
            tables,
            self.theta_deg,
            &self.energies_ev,
        )?;
        Ok(contrast(&scan, &self.contrast)?.0)
    }
}

/// ΔR/R at each grid thickness, evaluated in parallel.
pub fn resonance_sweep(setup: &ResonanceSetup, tables: &TableSet) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = setup.contrast.coverage();
    let (e0, e1) = (setup.energies_ev[0], setup.energies_ev[setup.energies_ev.len() - 1]);
    if e0 > lo || e1 < hi {
        return Err(Error::Range(format!(
            "sweep energies [{e0}, {e1}] eV do not cover [{lo}, {hi}] eV"
        )));
    }
    setup
        .thicknesses()
        .par_iter()
        .map(|&t| setup.simulate(tables, t).map(|c| (t, c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessEstimate {
    pub thickness_nm: f64,
    pub lower_nm: f64,
    pub upper_nm: f64,
    /// Smallest and largest simulated ΔR/R.
    pub band: (f64, f64),
    /// (FWHM, ΔR/R) pairs of the sweep.
    pub sweep: Vec<(f64, f64)>,
    pub measured: f64,
    pub measured_sigma: Option<f64>,
}

struct Inverter {
    log_t: Vec<f64>,
    values: Vec<f64>,
    curve: Pchip,
}

impl Inverter {
    fn band(&self) -> (f64, f64) {
        let lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Smallest thickness whose interpolated ΔR/R equals `target`.
    fn invert(&self, target: f64) -> Option<f64> {
        for i in 0..self.values.len() - 1 {
            let (a, b) = (self.values[i] - target, self.values[i + 1] - target);
            if a == 0.0 {
                return Some(self.log_t[i].exp());
            }
            if a * b <= 0.0 {
                let (mut lo, mut hi) = (self.log_t[i], self.log_t[i + 1]);
                let f_lo = a;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let f_mid = self.curve.eval(mid) - target;
                    if f_mid.signum() == f_lo.signum() && f_mid != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some((0.5 * (lo + hi)).exp());
            }
        }
        None
    }
}

/// Inverts a measured ΔR/R into a δ-layer FWHM via the simulated sweep.
///
/// The interval maps measured ± 1.96σ through the interpolant; ends falling
/// outside the simulated band are clamped to the grid limits.
pub fn thickness_from_resonance(
    measured: f64,
    measured_sigma: Option<f64>,
    setup: &ResonanceSetup,
    tables: &TableSet,
) -> Result<ThicknessEstimate> {
    if !(measured > 0.0) {
        return Err(Error::Domain(format!("measured contrast must be > 0, got {measured}")));
    }
    let sweep = resonance_sweep(setup, tables)?;
    invert_sweep(measured, measured_sigma, sweep)
}

pub(crate) fn invert_sweep(
    measured: f64,
    measured_sigma: Option<f64>,
    sweep: Vec<(f64, f64)>,
) -> Result<ThicknessEstimate> {
    let log_t: Vec<f64> = sweep.iter().map(|(t, _)| t.ln()).collect();
    let values: Vec<f64> = sweep.iter().map(|(_, c)| *c).collect();
    let inv = Inverter {
        curve: Pchip::new(log_t.clone(), values.clone())?,
        log_t,
        values,
    };
    let band = inv.band();
    if measured < band.0 || measured > band.1 {
        return Err(Error::OutOfSimulatedRange {
            value: measured,
            band_lo: band.0,
            band_hi: band.1,
        });
    }
    let thickness_nm = inv.invert(measured).expect("value inside band");
    let (t_min, t_max) = (sweep[0].0, sweep[sweep.len() - 1].0);
    let decreasing = inv.values[0] > inv.values[inv.values.len() - 1];
    let end_for = |target: f64| -> f64 {
        if target > band.1 {
            if decreasing { t_min } else { t_max }
        } else if target < band.0 {
            if decreasing { t_max } else { t_min }
        } else {
            inv.invert(target).expect("value inside band")
        }
    };
    let (lower_nm, upper_nm) = match measured_sigma {
        Some(s) if s > 0.0 => {
            let a = end_for(measured + 1.96 * s);
            let b = end_for(measured - 1.96 * s);
            (a.min(b).min(thickness_nm), a.max(b).max(thickness_nm))
        }
        _ => (thickness_nm, thickness_nm),
    };
    Ok(ThicknessEstimate {
        thickness_nm,
        lower_nm,
        upper_nm,
        band,
        sweep,
        measured,
        measured_sigma,
    })
}
