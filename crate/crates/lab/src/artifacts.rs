//! Versioned artifact files. CSV files open with a `# schema: ...` line; JSON documents carry
//! a top-level `schema` field.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRACE_SCHEMA: &str = "conic-ma-lab.trace/1";
pub const ENERGIES_SCHEMA: &str = "conic-ma-lab.energies/1";
pub const GEODESICS_SCHEMA: &str = "conic-ma-lab.geodesics/1";
pub const VERIFY_SCHEMA: &str = "conic-ma-lab.verify/1";
pub const CONVERGENCE_SCHEMA: &str = "conic-ma-lab.convergence/1";
pub const SUMMARY_SCHEMA: &str = "conic-ma-lab.summary/1";

pub const TRACE: &str = "trace.csv";
pub const ENERGIES: &str = "energies.csv";
pub const GEODESICS: &str = "geodesics.csv";
pub const VERIFY: &str = "verify.json";
pub const CONVERGENCE: &str = "convergence.json";
pub const SUMMARY: &str = "summary.json";
pub const EXTRAPOLATED: &str = "extrapolated.json";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("{0}: no artifacts found")]
    Missing(String),
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `rows` under a schema comment and a header.
pub fn write_csv<R: Serialize>(path: &Path, schema: &str, rows: &[R]) -> Result<(), ArtifactError> {
    let mut f = BufWriter::new(File::create(path).map_err(io(path))?);
    writeln!(f, "# schema: {schema}").map_err(io(path))?;
    {
        let mut w = csv::Writer::from_writer(&mut f);
        for r in rows {
            w.serialize(r).map_err(|e| ArtifactError::Format {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        }
        w.flush().map_err(io(path))?;
    }
    f.flush().map_err(io(path))
}

/// Reads a CSV artifact back, returning its schema and rows.
pub fn read_csv<R: for<'de> Deserialize<'de>>(
    path: &Path,
) -> Result<(String, Vec<R>), ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let schema = first
        .strip_prefix("# schema: ")
        .ok_or_else(|| ArtifactError::Format {
            path: path.display().to_string(),
            msg: "missing schema line".into(),
        })?
        .to_string();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let rows = r
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| ArtifactError::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    Ok((schema, rows))
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| ArtifactError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io(path))
}

/// Single-line JSON, for large field documents.
pub fn write_json_compact<T: Serialize>(path: &Path, doc: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string(doc).map_err(|e| ArtifactError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io(path))
}

pub fn read_json(path: &Path) -> Result<serde_json::Value, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| ArtifactError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub delta: f64,
    pub t: f64,
    pub residual: f64,
    pub lambda1: Option<f64>,
    pub iterations: usize,
    pub margin: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRow {
    /// radial | diameter | shortcut_through | shortcut_around
    pub kind: String,
    pub metric: String,
    pub delta: f64,
    pub beta: f64,
    /// r0 for radial rows, eps for shortcut rows
    pub param: f64,
    pub value: f64,
    pub oracle: Option<f64>,
}

/// Comparison direction of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// value <= bound
    Upper,
    /// value >= bound
    Lower,
}

/// One verified property. `margin` is positive when the check passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub kind: Bound,
    pub margin: f64,
    /// Only enabled checks decide the exit code.
    pub enabled: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, value: f64, kind: Bound, bound: f64, detail: impl Into<String>) -> Self {
        let margin = match kind {
            Bound::Upper => bound - value,
            Bound::Lower => value - bound,
        };
        Check {
            name: name.to_string(),
            passed: margin >= 0.0,
            value,
            bound,
            kind,
            margin,
            enabled: true,
            detail: detail.into(),
        }
    }

    /// value <= bound
    pub fn at_most(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value, Bound::Upper, bound, detail)
    }

    /// value >= bound
    pub fn at_least(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value, Bound::Lower, bound, detail)
    }

    pub fn informational(mut self) -> Self {
        self.enabled = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub schema: String,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl VerifyDoc {
    pub fn new(checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        VerifyDoc {
            schema: VERIFY_SCHEMA.to_string(),
            passed,
            failed: checks.len() - passed,
            checks,
        }
    }

    pub fn all_enabled_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.enabled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_margins() {
        let c = Check::at_most("x", 1e-9, 1e-8, "");
        assert!(c.passed && c.margin > 0.0);
        let c = Check::at_least("y", -1.0, 0.0, "");
        assert!(!c.passed && c.margin == -1.0);
        assert!(!VerifyDoc::new(vec![c.clone()]).all_enabled_pass());
        assert!(VerifyDoc::new(vec![c.informational()]).all_enabled_pass());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("conic-ma-lab-art-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.csv");
        let rows = vec![TraceRow {
            delta: 0.1,
            t: 0.5,
            residual: 1e-12,
            lambda1: None,
            iterations: 3,
            margin: 0.9,
            phi_min: -0.1,
            phi_max: 0.2,
        }];
        write_csv(&p, TRACE_SCHEMA, &rows).unwrap();
        let (schema, back): (String, Vec<TraceRow>) = read_csv(&p).unwrap();
        assert_eq!(schema, TRACE_SCHEMA);
        assert_eq!(back, rows);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
