//! Physical constants in the crate's unit system (nm, eV).

/// Immutable set of constants used for every unit conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Classical electron radius, nm.
    pub r0_nm: f64,
    /// Planck constant times speed of light, eV·nm.
    pub hc_ev_nm: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    r0_nm: 2.817_940_326_2e-6,
    hc_ev_nm: 1_239.841_984,
};

/// Classical electron radius, nm.
pub const R0_NM: f64 = CONSTANTS.r0_nm;

/// hc in eV·nm.
pub const HC_EV_NM: f64 = CONSTANTS.hc_ev_nm;

/// Photon wavelength in nm for an energy in eV.
#[inline]
pub fn wavelength_nm(energy_ev: f64) -> f64 {
    HC_EV_NM / energy_ev
}

/// Photon energy in eV for a wavelength in nm.
#[inline]
pub fn energy_ev(wavelength_nm: f64) -> f64 {
    HC_EV_NM / wavelength_nm
}

/// Ratio between the FWHM of a Gaussian and its standard deviation, 2√(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
