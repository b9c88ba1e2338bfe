use std::path::PathBuf;

use rcxr_core::Error as CoreError;
use thiserror::Error;

/// Process exit status for every failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const TABLES_OR_IO: i32 = 3;
    pub const NO_SIGNAL: i32 = 4;
    pub const SAME_SIDE_OF_EDGE: i32 = 5;
    pub const OUT_OF_BAND: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}: invalid configuration at `{key}`: {message}")]
    Schema {
        file: String,
        key: String,
        message: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    DataFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Precondition(String),

    #[error(
        "energies {below_ev} eV and {above_ev} eV lie on the same side of the {edge_ev} eV edge"
    )]
    SameSideOfEdge {
        below_ev: f64,
        above_ev: f64,
        edge_ev: f64,
    },

    #[error("scattering-factor tables: {0}")]
    Tables(#[source] CoreError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::DataFile { .. } | CliError::Precondition(_) => {
                exit::INVALID_INPUT
            }
            CliError::SameSideOfEdge { .. } => exit::SAME_SIDE_OF_EDGE,
            CliError::Tables(_) | CliError::Io { .. } => exit::TABLES_OR_IO,
            CliError::Core { source, .. } => core_exit_code(source),
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

/// Exit status for a toolkit error raised outside table loading.
pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Parse { .. }
        | CoreError::Domain(_)
        | CoreError::Coverage(_)
        | CoreError::Sampling(_)
        | CoreError::Singularity(_)
        | CoreError::Grid(_)
        | CoreError::Range(_)
        | CoreError::Alignment(_)
        | CoreError::InvalidCutoff { .. } => exit::INVALID_INPUT,
        CoreError::Structure { .. }
        | CoreError::EnergyOutOfRange { .. }
        | CoreError::DataGap { .. }
        | CoreError::MissingTable { .. }
        | CoreError::Io(_) => exit::TABLES_OR_IO,
        CoreError::NoLayerDetected { .. } | CoreError::NoResonantSignal { .. } => exit::NO_SIGNAL,
        CoreError::OutOfSimulatedRange { .. } => exit::OUT_OF_BAND,
        CoreError::FitFailed(_) => exit::INTERNAL,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
