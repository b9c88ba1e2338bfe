//! Forward models and inversion pipelines for specular X-ray reflectivity of
//! layered samples carrying a dilute δ-layer.
//!
//! The crate is organised bottom-up:
//!
//! - [`xsf`]: atomic scattering-factor tables, scattering-length densities and
//!   refractive indices.
//! - [`model`]: layer stacks, δ-layer descriptions and depth profiles.
//! - [`forward`]: kinematic (Born) and dynamical (Parratt) reflectivity,
//!   energy scans and counting noise.
//! - [`numfit`]: resampling, windowed FFTs, Levenberg–Marquardt and
//!   profile-likelihood intervals.
//! - [`extract`]: Fourier filtering, resonant differencing, envelope fitting,
//!   profile reconstruction and resonance-contrast thickness inversion.
//!
//! Units are nm for lengths, nm⁻¹ for Q, eV for photon energies, atoms/nm³ for
//! volume densities and atoms/nm² for areal densities.

// `!(x > 0.0)` is used deliberately so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod extract;
pub mod forward;
pub mod model;
pub mod numfit;
pub mod samples;
pub mod xsf;

pub use error::{Error, Result};
