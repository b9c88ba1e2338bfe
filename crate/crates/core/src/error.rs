use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("table structure error for {element}: {message}")]
    Structure { element: String, message: String },

    #[error("energy {energy_ev} eV outside table range [{min_ev}, {max_ev}] eV for {element}")]
    EnergyOutOfRange {
        element: String,
        energy_ev: f64,
        min_ev: f64,
        max_ev: f64,
    },

    #[error("data gap: f1 is not tabulated around {energy_ev} eV for {element}")]
    DataGap { element: String, energy_ev: f64 },

    #[error("no scattering-factor table for element {element} ({location})")]
    MissingTable { element: String, location: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(
        "no layer detected (peak at {depth_nm:.2} nm, peak/median {peak_to_median:.2}, \
         relative amplitude {relative_amplitude:.3e})"
    )]
    NoLayerDetected {
        depth_nm: f64,
        peak_to_median: f64,
        relative_amplitude: f64,
    },

    #[error(
        "no resonant signal: the {depth_nm:.2} nm oscillation changes by only \
         {resonant_fraction:.3e} of its amplitude across the edge"
    )]
    NoResonantSignal {
        depth_nm: f64,
        resonant_fraction: f64,
    },

    #[error("invalid cutoff: {cutoff_nm} nm must lie below the oscillation depth {depth_nm} nm")]
    InvalidCutoff { cutoff_nm: f64, depth_nm: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("value {value} outside simulated band [{band_lo}, {band_hi}]")]
    OutOfSimulatedRange {
        value: f64,
        band_lo: f64,
        band_hi: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
