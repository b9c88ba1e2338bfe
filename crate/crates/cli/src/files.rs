//! Delimiter-separated curve and energy-scan files.
//!
//! Header lines start with `#`; those of the form `# key = value` carry
//! metadata. Data rows hold two or three numbers separated by whitespace or
//! commas. The abscissa is never guessed: the header must declare it.

use std::fmt::Write as _;
use std::path::Path;

use rcxr_core::forward::{EnergyScan, ReflectivityCurve};

use crate::config::Abscissa;
use crate::error::{CliError, Result};

/// Header metadata of a data file, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_owned(), value)),
        }
    }
}

/// Header plus numeric rows, with the 1-based line number of each row.
#[derive(Debug, Clone, PartialEq)]
struct Table {
    header: Header,
    header_end_line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

fn parse_table(path: &Path, text: &str) -> Result<Table> {
    let err = |line: usize, message: String| CliError::DataFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut header = Header::default();
    let mut header_end_line = 0;
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if !rows.is_empty() {
                continue;
            }
            header_end_line = line_no;
            if let Some((k, v)) = comment.split_once('=') {
                header.set(k.trim(), v.trim());
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let mut values = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f
                .parse()
                .map_err(|_| err(line_no, format!("cannot read {f:?} as a number")))?;
            if !v.is_finite() {
                return Err(err(line_no, format!("non-finite value {f:?}")));
            }
            values.push(v);
        }
        match width {
            None if !(2..=3).contains(&values.len()) => {
                return Err(err(
                    line_no,
                    format!("expected 2 or 3 columns, found {}", values.len()),
                ))
            }
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(err(
                    line_no,
                    format!("expected {w} columns like the first row, found {}", values.len()),
                ))
            }
            Some(_) => {}
        }
        rows.push((line_no, values));
    }
    if rows.is_empty() {
        return Err(err(text.lines().count().max(1), "no data rows".into()));
    }
    Ok(Table {
        header,
        header_end_line,
        rows,
    })
}

fn header_number(path: &Path, t: &Table, key: &str) -> Result<Option<f64>> {
    match t.header.get(key) {
        None => Ok(None),
        Some(v) => v.parse::<f64>().map(Some).map_err(|_| CliError::DataFile {
            path: path.to_path_buf(),
            line: t.header_end_line.max(1),
            message: format!("header key {key} has non-numeric value {v:?}"),
        }),
    }
}

fn require_header(path: &Path, t: &Table, key: &str) -> Result<f64> {
    header_number(path, t, key)?.ok_or_else(|| CliError::DataFile {
        path: path.to_path_buf(),
        line: t.header_end_line.max(1),
        message: format!("header must declare `# {key} = ...`"),
    })
}

/// Checks that a numeric column is strictly increasing, citing the offending line.
fn check_increasing(path: &Path, t: &Table, col: usize, name: &str) -> Result<()> {
    for w in t.rows.windows(2) {
        if !(w[1].1[col] > w[0].1[col]) {
            return Err(CliError::DataFile {
                path: path.to_path_buf(),
                line: w[1].0,
                message: format!("{name} must be strictly increasing"),
            });
        }
    }
    Ok(())
}

fn check_nonnegative(path: &Path, t: &Table, col: usize, name: &str) -> Result<()> {
    if let Some((line, _)) = t.rows.iter().find(|(_, r)| !(r[col] >= 0.0)) {
        return Err(CliError::DataFile {
            path: path.to_path_buf(),
            line: *line,
            message: format!("{name} must be >= 0"),
        });
    }
    Ok(())
}

/// A reflectivity curve read from disk with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub curve: ReflectivityCurve,
    pub header: Header,
    pub abscissa: Abscissa,
}

pub fn parse_curve(path: &Path, text: &str) -> Result<CurveFile> {
    let t = parse_table(path, text)?;
    let energy = require_header(path, &t, "energy_ev")?;
    let abscissa = match t.header.get("abscissa") {
        Some("q_per_nm") => Abscissa::QPerNm,
        Some("theta_deg") => Abscissa::ThetaDeg,
        Some(other) => {
            return Err(CliError::DataFile {
                path: path.to_path_buf(),
                line: t.header_end_line.max(1),
                message: format!("abscissa must be q_per_nm or theta_deg, got {other:?}"),
            })
        }
        None => {
            return Err(CliError::DataFile {
                path: path.to_path_buf(),
                line: t.header_end_line.max(1),
                message: "header must declare `# abscissa = q_per_nm` or `# abscissa = theta_deg`".into(),
            })
        }
    };
    check_increasing(path, &t, 0, abscissa.key())?;
    check_nonnegative(path, &t, 1, "reflectivity")?;
    let x: Vec<f64> = t.rows.iter().map(|(_, r)| r[0]).collect();
    let r: Vec<f64> = t.rows.iter().map(|(_, r)| r[1]).collect();
    let ctx = path.display().to_string();
    let mut curve = match abscissa {
        Abscissa::QPerNm => ReflectivityCurve::new(x, r, energy),
        Abscissa::ThetaDeg => ReflectivityCurve::from_theta(x, r, energy),
    }
    .map_err(|e| CliError::core(ctx.clone(), e))?;
    if t.rows[0].1.len() == 3 {
        let sigma = t.rows.iter().map(|(_, r)| r[2]).collect();
        curve = curve.with_sigma(sigma).map_err(|e| CliError::core(ctx.clone(), e))?;
    }
    curve.unreliable_below_q = header_number(path, &t, "unreliable_below_q_per_nm")?;
    Ok(CurveFile {
        curve,
        header: t.header,
        abscissa,
    })
}

pub fn read_curve(path: &Path) -> Result<CurveFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_curve(path, &text)
}

/// Curve text with `header` lines first; the abscissa column follows `abscissa`.
pub fn format_curve(curve: &ReflectivityCurve, abscissa: Abscissa, header: &Header) -> Result<String> {
    let mut h = header.clone();
    h.set("energy_ev", curve.energy_ev);
    h.set("abscissa", abscissa.key());
    if let Some(q) = curve.unreliable_below_q {
        h.set("unreliable_below_q_per_nm", q);
    }
    let x: Vec<f64> = match abscissa {
        Abscissa::QPerNm => curve.q.clone(),
        Abscissa::ThetaDeg => match &curve.theta_deg {
            Some(t) => t.clone(),
            None => curve
                .q
                .iter()
                .map(|q| rcxr_core::forward::theta_from_q(*q, curve.energy_ev))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CliError::core("writing theta column", e))?,
        },
    };
    let mut columns = format!("{} r", abscissa.key());
    if curve.sigma_r.is_some() {
        columns.push_str(" sigma_r");
    }
    h.set("columns", columns);
    let mut out = String::from("# rcxr reflectivity curve\n");
    for (k, v) in &h.entries {
        let _ = writeln!(out, "# {k} = {v}");
    }
    for i in 0..curve.len() {
        let _ = write!(out, "{} {:e}", x[i], curve.r[i]);
        if let Some(s) = &curve.sigma_r {
            let _ = write!(out, " {:e}", s[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// A fixed-angle energy scan read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFile {
    pub scan: EnergyScan,
    pub header: Header,
}

pub fn parse_scan(path: &Path, text: &str) -> Result<ScanFile> {
    let t = parse_table(path, text)?;
    let theta = require_header(path, &t, "theta_deg")?;
    if let Some(a) = t.header.get("abscissa") {
        if a != "energy_ev" {
            return Err(CliError::DataFile {
                path: path.to_path_buf(),
                line: t.header_end_line.max(1),
                message: format!("energy scans must declare abscissa = energy_ev, got {a:?}"),
            });
        }
    }
    let normalized = match t.header.get("normalized") {
        None | Some("true") => true,
        Some("false") => false,
        Some(other) => {
            return Err(CliError::DataFile {
                path: path.to_path_buf(),
                line: t.header_end_line.max(1),
                message: format!("normalized must be true or false, got {other:?}"),
            })
        }
    };
    check_increasing(path, &t, 0, "energy_ev")?;
    check_nonnegative(path, &t, 1, "reflectivity")?;
    let e = t.rows.iter().map(|(_, r)| r[0]).collect();
    let r = t.rows.iter().map(|(_, r)| r[1]).collect();
    let scan = EnergyScan::new(theta, e, r, normalized)
        .map_err(|err| CliError::core(path.display().to_string(), err))?;
    Ok(ScanFile {
        scan,
        header: t.header,
    })
}

pub fn read_scan(path: &Path) -> Result<ScanFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scan(path, &text)
}

pub fn format_scan(scan: &EnergyScan, header: &Header) -> String {
    let mut h = header.clone();
    h.set("theta_deg", scan.theta_deg);
    h.set("abscissa", "energy_ev");
    h.set("normalized", scan.normalized);
    h.set("columns", "energy_ev r");
    let mut out = String::from("# rcxr energy scan\n");
    for (k, v) in &h.entries {
        let _ = writeln!(out, "# {k} = {v}");
    }
    for (e, r) in scan.energy_ev.iter().zip(&scan.r) {
        let _ = writeln!(out, "{e} {r:e}");
    }
    out
}
