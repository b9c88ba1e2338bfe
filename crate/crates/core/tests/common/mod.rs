#![allow(dead_code)]

use rcxr_core::forward::{linspace, ReflectivityCurve, Solver};
use rcxr_core::model::{DeltaLayerSpec, GridOptions, LayerStack};
use rcxr_core::samples::{oxidized_silicon, REFERENCE_N2D};
use rcxr_core::xsf::{BuiltinTables, TableSet};

pub const BELOW_EV: f64 = 1300.0;
pub const ABOVE_EV: f64 = 1335.0;

pub fn tables() -> TableSet {
    TableSet::builtin(BuiltinTables::Chantler)
}

pub fn reference_stack() -> LayerStack {
    oxidized_silicon(1.0, 0.1).unwrap()
}

pub fn reference_delta() -> DeltaLayerSpec {
    DeltaLayerSpec::gaussian_fwhm(18.1, 0.9, REFERENCE_N2D, "As", "Si").unwrap()
}

pub fn q_grid() -> Vec<f64> {
    linspace(0.5, 5.5, 1000)
}

pub fn simulate(
    solver: Solver,
    stack: &LayerStack,
    delta: Option<&DeltaLayerSpec>,
    energy_ev: f64,
    q: &[f64],
) -> ReflectivityCurve {
    solver
        .simulate(stack, delta, &tables(), energy_ev, q, &GridOptions::default())
        .unwrap()
}

pub fn pair(
    solver: Solver,
    stack: &LayerStack,
    delta: Option<&DeltaLayerSpec>,
) -> (ReflectivityCurve, ReflectivityCurve) {
    let q = q_grid();
    (
        simulate(solver, stack, delta, BELOW_EV, &q),
        simulate(solver, stack, delta, ABOVE_EV, &q),
    )
}

pub fn pi_units(x: f64) -> f64 {
    x / std::f64::consts::PI
}
