//! Run manifests: what produced an output, from which inputs and tables.

use std::path::{Path, PathBuf};

use rcxr_core::xsf::{TableSet, TableSource};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{CliError, Result};

pub const TOOLKIT: &str = "rcxr";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRecord {
    pub element: String,
    pub origin: String,
    pub sha256: String,
    pub rows: usize,
    pub energy_min_ev: f64,
    pub energy_max_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub toolkit_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Only recorded when SOURCE_DATE_EPOCH is set, so reruns stay identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub tables: Vec<TableRecord>,
    pub config: toml::Value,
}

/// Scattering-factor tables plus the provenance of each file.
#[derive(Debug, Clone)]
pub struct LoadedTables {
    pub set: TableSet,
    pub records: Vec<TableRecord>,
}

pub fn load_tables(source: &TableSource, elements: &[String]) -> Result<LoadedTables> {
    let set = TableSet::load(source, elements).map_err(CliError::Tables)?;
    let mut records = Vec::new();
    for table in set.tables() {
        let text = source.read_text(table.element()).map_err(CliError::Tables)?;
        let (lo, hi) = table.energy_range();
        records.push(TableRecord {
            element: table.element().to_owned(),
            origin: table.origin().to_owned(),
            sha256: sha256_hex(text.as_bytes()),
            rows: table.rows().len(),
            energy_min_ev: lo,
            energy_max_ev: hi,
        });
    }
    Ok(LoadedTables { set, records })
}

/// Collects inputs and outputs of one command, then writes the manifest.
#[derive(Debug)]
pub struct Run {
    manifest: RunManifest,
    path: PathBuf,
}

impl Run {
    pub fn new(command: &str, manifest_path: &Path, config: &Config, seed: Option<u64>) -> Self {
        let created_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse().ok());
        Self {
            manifest: RunManifest {
                toolkit: TOOLKIT.into(),
                toolkit_version: TOOLKIT_VERSION.into(),
                command: command.into(),
                seed,
                created_unix,
                inputs: Vec::new(),
                outputs: Vec::new(),
                tables: Vec::new(),
                config: toml::Value::try_from(config).expect("config serializes"),
            },
            path: manifest_path.to_path_buf(),
        }
    }

    /// File name other outputs use to refer to this manifest.
    pub fn reference(&self) -> String {
        self.path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn display_path(&self, p: &Path) -> String {
        let base = self.path.parent().unwrap_or_else(|| Path::new(""));
        match p.strip_prefix(base) {
            Ok(rel) if !base.as_os_str().is_empty() => rel.display().to_string(),
            _ => p.display().to_string(),
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        let record = FileRecord {
            role: role.into(),
            path: self.display_path(path),
            sha256: sha256_hex(bytes),
        };
        self.manifest.inputs.push(record);
    }

    pub fn add_tables(&mut self, records: &[TableRecord]) {
        self.manifest.tables.extend_from_slice(records);
    }

    /// Writes `contents` to `path` and records it.
    pub fn write_output(&mut self, role: &str, path: &Path, contents: &str) -> Result<()> {
        std::fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
        let record = FileRecord {
            role: role.into(),
            path: self.display_path(path),
            sha256: sha256_hex(contents.as_bytes()),
        };
        self.manifest.outputs.push(record);
        Ok(())
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn finish(self) -> Result<PathBuf> {
        let text = toml::to_string(&self.manifest)
            .map_err(|e| CliError::Internal(format!("manifest serialization: {e}")))?;
        std::fs::write(&self.path, text).map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// `<dir>/<stem>.manifest.toml` beside `output`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.toml"))
}
