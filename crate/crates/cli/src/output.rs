//! Run directory, CSV writers and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kresnet_core::numerics::DensityField;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub description: String,
    pub columns: Vec<Column>,
    /// Time the file describes, for snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRecord {
    pub t: f64,
    pub mass: f64,
    /// `|mass(t) − mass(0)|`.
    pub drift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    pub zero_flux: bool,
    pub steps: usize,
    pub max_mass_drift: f64,
    /// `max_mass_drift · 1000 / steps`.
    pub drift_per_1000_steps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub kind: ExperimentKind,
    pub tool_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub run_dir: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mass_ledger: Vec<MassRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation: Option<Conservation>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn diagnostic_f64(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).and_then(|v| v.as_f64())
    }

    pub fn diagnostic_bool(&self, key: &str) -> Option<bool> {
        self.diagnostics.get(key).and_then(|v| v.as_bool())
    }

    pub fn output(&self, path: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.path == path)
    }
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip formatting, so identical runs give identical bytes.
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// The run directory and the list of files written into it.
pub struct RunDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl RunDir {
    pub fn create(root: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(RunDir { root, files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn into_files(self) -> Vec<OutputFile> {
        self.files
    }

    /// Headered CSV with one row per item of `rows`.
    pub fn csv<I>(&mut self, rel: &str, description: &str, columns: &[(&str, &str)], time: Option<f64>, rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(columns.iter().map(|c| c.0))?;
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            w.write_record(row.into_iter().map(fmt))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.path != rel);
        self.files.push(OutputFile {
            path: rel.to_string(),
            description: description.to_string(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            time,
        });
        Ok(())
    }

    /// `x, g` or `x, y, g` rows of a density.
    pub fn field(&mut self, rel: &str, description: &str, f: &DensityField, time: Option<f64>) -> CliResult<()> {
        let x = f.grid.x().clone();
        match f.grid.y().cloned() {
            None => self.csv(
                rel,
                description,
                &[("x", "state"), ("g", "1/state")],
                time,
                f.values.iter().enumerate().map(|(j, v)| vec![x.center(j), *v]),
            ),
            Some(y) => {
                let nx = x.cells;
                self.csv(
                    rel,
                    description,
                    &[("x", "state"), ("y", "state"), ("g", "1/state^2")],
                    time,
                    f.values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| vec![x.center(i % nx), y.center(i / nx), *v]),
                )
            }
        }
    }

    /// One row per particle, one column per coordinate.
    pub fn ensemble(&mut self, rel: &str, description: &str, dim: usize, states: &[f64], time: Option<f64>) -> CliResult<()> {
        let cols: &[(&str, &str)] = if dim == 1 {
            &[("x", "state")]
        } else {
            &[("x", "state"), ("y", "state")]
        };
        self.csv(rel, description, cols, time, states.chunks(dim).map(|s| s.to_vec()))
    }
}
