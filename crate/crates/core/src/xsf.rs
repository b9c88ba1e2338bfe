//! Atomic scattering-factor tables and the optical constants derived from them.
//!
//! Tables use the Henke `.nff` text layout: one header line followed by
//! whitespace-separated `E(eV) f1 f2` rows. Henke tables mark rows where f1 is
//! not tabulated with a large negative sentinel (−9999); such rows keep their
//! f2 value but cannot be used to interpolate f1.
//!
//! Sign convention: f = f1 + i·f2 with f2 ≥ 0, so Im ρ ≥ 0 and Im n ≤ 0.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::constants::{wavelength_nm, R0_NM};
use crate::error::{Error, Result};

/// Environment variable naming a directory of `<element>.nff` files.
pub const TABLES_DIR_ENV: &str = "RCXR_TABLES_DIR";

/// f1 values at or below this are treated as "not tabulated".
const F1_SENTINEL_THRESHOLD: f64 = -9000.0;

/// One tabulated energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorRow {
    pub energy_ev: f64,
    /// `None` where the source table carries the f1 sentinel.
    pub f1: Option<f64>,
    pub f2: f64,
}

/// Tabulated complex atomic scattering factor of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFactorTable {
    element: String,
    rows: Vec<FactorRow>,
    origin: String,
}

/// Canonical element symbol: first letter upper case, rest lower case.
pub fn normalize_symbol(symbol: &str) -> String {
    let s = symbol.trim();
    let mut out = String::with_capacity(s.len());
    for (i, c) in s.chars().enumerate() {
        if i == 0 {
            out.extend(c.to_uppercase());
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

impl ScatteringFactorTable {
    /// Builds a table from rows, checking the ordering and sign invariants.
    pub fn new(element: &str, rows: Vec<FactorRow>, origin: impl Into<String>) -> Result<Self> {
        let element = normalize_symbol(element);
        if rows.len() < 2 {
            return Err(Error::Structure {
                element,
                message: format!("need at least 2 rows, got {}", rows.len()),
            });
        }
        for pair in rows.windows(2) {
            if !(pair[1].energy_ev > pair[0].energy_ev) {
                return Err(Error::Structure {
                    element,
                    message: format!(
                        "energies not strictly increasing: {} eV followed by {} eV",
                        pair[0].energy_ev, pair[1].energy_ev
                    ),
                });
            }
        }
        if let Some(row) = rows.iter().find(|r| r.f2 < 0.0 || !r.f2.is_finite()) {
            return Err(Error::Structure {
                element,
                message: format!("negative or non-finite f2 at {} eV", row.energy_ev),
            });
        }
        Ok(Self {
            element,
            rows,
            origin: origin.into(),
        })
    }

    pub fn element(&self) -> &str {
        &self.element
    }

    pub fn rows(&self) -> &[FactorRow] {
        &self.rows
    }

    /// Where the table came from (file path or built-in set name).
    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.rows[0].energy_ev, self.rows[self.rows.len() - 1].energy_ev)
    }

    /// f1 + i·f2 at `energy_ev`, each component linearly interpolated between
    /// the bracketing rows.
    pub fn scattering_factor(&self, energy_ev: f64) -> Result<Complex64> {
        let (min_ev, max_ev) = self.energy_range();
        if !(energy_ev >= min_ev && energy_ev <= max_ev) {
            return Err(Error::EnergyOutOfRange {
                element: self.element.clone(),
                energy_ev,
                min_ev,
                max_ev,
            });
        }
        let gap = || Error::DataGap {
            element: self.element.clone(),
            energy_ev,
        };
        // first row with energy > E; E >= min so idx >= 1 unless E == max
        let idx = self.rows.partition_point(|r| r.energy_ev <= energy_ev);
        let upper = idx.min(self.rows.len() - 1);
        let lower = upper - 1;
        let (a, b) = (&self.rows[lower], &self.rows[upper]);
        if energy_ev == b.energy_ev {
            return Ok(Complex64::new(b.f1.ok_or_else(gap)?, b.f2));
        }
        if energy_ev == a.energy_ev {
            return Ok(Complex64::new(a.f1.ok_or_else(gap)?, a.f2));
        }
        let (f1a, f1b) = match (a.f1, b.f1) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(gap()),
        };
        let t = (energy_ev - a.energy_ev) / (b.energy_ev - a.energy_ev);
        Ok(Complex64::new(
            f1a + t * (f1b - f1a),
            a.f2 + t * (b.f2 - a.f2),
        ))
    }
}

/// Parses a Henke-style `.nff` stream.
///
/// The first non-blank line is a header and is skipped. Rows are
/// `energy f1 f2`, whitespace separated; trailing fields are ignored.
pub fn load_nff<R: BufRead>(reader: R, element: &str) -> Result<ScatteringFactorTable> {
    load_nff_with_origin(reader, element, "stream")
}

pub fn load_nff_with_origin<R: BufRead>(
    reader: R,
    element: &str,
    origin: &str,
) -> Result<ScatteringFactorTable> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let mut fields = text.split_whitespace();
        let mut next = |name: &str| -> Result<f64> {
            let tok = fields.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing {name} column"),
            })?;
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("cannot parse {name} value {tok:?}"),
            })
        };
        let energy_ev = next("energy")?;
        let f1 = next("f1")?;
        let f2 = next("f2")?;
        if !energy_ev.is_finite() || !f1.is_finite() || !f2.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: "non-finite value".into(),
            });
        }
        rows.push(FactorRow {
            energy_ev,
            f1: (f1 > F1_SENTINEL_THRESHOLD).then_some(f1),
            f2,
        });
    }
    ScatteringFactorTable::new(element, rows, origin)
}

/// Δf = f_dopant − f_host at one energy.
pub fn delta_f(
    dopant: &ScatteringFactorTable,
    host: &ScatteringFactorTable,
    energy_ev: f64,
) -> Result<Complex64> {
    Ok(dopant.scattering_factor(energy_ev)? - host.scattering_factor(energy_ev)?)
}

/// Composition as number densities per element.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    components: Vec<(String, f64)>,
}

impl Material {
    /// `components` are `(element, atoms/nm³)` pairs.
    pub fn new<S: AsRef<str>>(components: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let components: Vec<(String, f64)> = components
            .into_iter()
            .map(|(e, n)| (normalize_symbol(e.as_ref()), n))
            .collect();
        if components.is_empty() {
            return Err(Error::Domain("material needs at least one component".into()));
        }
        if let Some((e, n)) = components.iter().find(|(_, n)| !(*n >= 0.0) || !n.is_finite()) {
            return Err(Error::Domain(format!("density of {e} must be finite and >= 0, got {n}")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(String, f64)] {
        &self.components
    }

    pub fn elements(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|(e, _)| e.as_str())
    }

    /// Same composition with every density multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.components.iter().map(|(e, n)| (e.as_str(), n * factor)))
    }
}

/// Which built-in tabulation to use when no directory is configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinTables {
    /// NIST FFAST (Chantler) factors; default.
    Chantler,
    /// CXRO (Henke) factors.
    Henke,
}

impl BuiltinTables {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinTables::Chantler => "chantler",
            BuiltinTables::Henke => "henke",
        }
    }

    /// Embedded `.nff` text for an element, if bundled.
    pub fn nff_text(self, element: &str) -> Option<&'static str> {
        let el = normalize_symbol(element);
        match (self, el.as_str()) {
            (BuiltinTables::Chantler, "As") => Some(include_str!("../data/chantler/as.nff")),
            (BuiltinTables::Chantler, "Si") => Some(include_str!("../data/chantler/si.nff")),
            (BuiltinTables::Chantler, "O") => Some(include_str!("../data/chantler/o.nff")),
            (BuiltinTables::Henke, "As") => Some(include_str!("../data/henke/as.nff")),
            (BuiltinTables::Henke, "Si") => Some(include_str!("../data/henke/si.nff")),
            (BuiltinTables::Henke, "O") => Some(include_str!("../data/henke/o.nff")),
            _ => None,
        }
    }

    pub const ELEMENTS: [&'static str; 3] = ["As", "Si", "O"];
}

/// Where a [`TableSet`] was read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableSource {
    Builtin(BuiltinTables),
    Directory(PathBuf),
}

impl TableSource {
    /// Command-line directory, then [`TABLES_DIR_ENV`], then the built-in
    /// Chantler set.
    pub fn resolve(cli_dir: Option<&Path>) -> Self {
        if let Some(dir) = cli_dir {
            return TableSource::Directory(dir.to_path_buf());
        }
        match std::env::var_os(TABLES_DIR_ENV) {
            Some(dir) if !dir.is_empty() => TableSource::Directory(PathBuf::from(dir)),
            _ => TableSource::Builtin(BuiltinTables::Chantler),
        }
    }

    /// Raw `.nff` text for one element.
    pub fn read_text(&self, element: &str) -> Result<String> {
        let el = normalize_symbol(element);
        match self {
            TableSource::Builtin(set) => set
                .nff_text(&el)
                .map(str::to_owned)
                .ok_or_else(|| Error::MissingTable {
                    element: el.clone(),
                    location: format!("built-in {} set", set.name()),
                }),
            TableSource::Directory(dir) => {
                let path = dir.join(format!("{}.nff", el.to_lowercase()));
                std::fs::read_to_string(&path).map_err(|_| Error::MissingTable {
                    element: el.clone(),
                    location: path.display().to_string(),
                })
            }
        }
    }

    fn origin(&self, element: &str) -> String {
        match self {
            TableSource::Builtin(set) => format!("builtin:{}/{}", set.name(), element.to_lowercase()),
            TableSource::Directory(dir) => dir
                .join(format!("{}.nff", element.to_lowercase()))
                .display()
                .to_string(),
        }
    }
}

/// Immutable collection of scattering-factor tables keyed by element.
#[derive(Debug, Clone, Default)]
pub struct TableSet {
    tables: BTreeMap<String, Arc<ScatteringFactorTable>>,
}

impl TableSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads `elements` from `source`.
    pub fn load<S: AsRef<str>>(
        source: &TableSource,
        elements: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let mut set = Self::new();
        for el in elements {
            let el = normalize_symbol(el.as_ref());
            if set.tables.contains_key(&el) {
                continue;
            }
            let text = source.read_text(&el)?;
            let table = load_nff_with_origin(text.as_bytes(), &el, &source.origin(&el))?;
            set.insert(table);
        }
        Ok(set)
    }

    /// As, Si and O from a bundled tabulation.
    pub fn builtin(set: BuiltinTables) -> Self {
        Self::load(&TableSource::Builtin(set), BuiltinTables::ELEMENTS)
            .expect("bundled tables are well formed")
    }

    pub fn insert(&mut self, table: ScatteringFactorTable) {
        self.tables
            .insert(table.element().to_owned(), Arc::new(table));
    }

    pub fn get(&self, element: &str) -> Result<&ScatteringFactorTable> {
        let el = normalize_symbol(element);
        self.tables
            .get(&el)
            .map(|t| t.as_ref())
            .ok_or_else(|| Error::MissingTable {
                element: el,
                location: "loaded table set".into(),
            })
    }

    pub fn tables(&self) -> impl Iterator<Item = &ScatteringFactorTable> {
        self.tables.values().map(|t| t.as_ref())
    }

    pub fn scattering_factor(&self, element: &str, energy_ev: f64) -> Result<Complex64> {
        self.get(element)?.scattering_factor(energy_ev)
    }

    pub fn delta_f(&self, dopant: &str, host: &str, energy_ev: f64) -> Result<Complex64> {
        delta_f(self.get(dopant)?, self.get(host)?, energy_ev)
    }
}

/// Scattering-length density ρ = r0 Σ N_q f_q(E), nm⁻².
pub fn sld(material: &Material, tables: &TableSet, energy_ev: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (el, n) in material.components() {
        acc += tables.scattering_factor(el, energy_ev)? * *n;
    }
    Ok(acc * R0_NM)
}

/// n = 1 − λ²ρ/(2π).
pub fn refractive_index(material: &Material, tables: &TableSet, energy_ev: f64) -> Result<Complex64> {
    Ok(refractive_index_from_sld(sld(material, tables, energy_ev)?, energy_ev))
}

pub fn refractive_index_from_sld(rho: Complex64, energy_ev: f64) -> Complex64 {
    let lambda = wavelength_nm(energy_ev);
    Complex64::new(1.0, 0.0) - rho * (lambda * lambda / (2.0 * std::f64::consts::PI))
}

pub fn sld_from_refractive_index(n: Complex64, energy_ev: f64) -> Complex64 {
    let lambda = wavelength_nm(energy_ev);
    (Complex64::new(1.0, 0.0) - n) * (2.0 * std::f64::consts::PI / (lambda * lambda))
}
