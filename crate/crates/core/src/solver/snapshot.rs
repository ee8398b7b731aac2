//! Snapshot files: `<stem>.f64` holds the density as raw little-endian
//! `f64` in x-fastest order, `<stem>.json` is the sidecar manifest.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{FieldState, GridSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SnapshotManifest {
    pub version: String,
    pub config_hash: String,
    pub n: usize,
    pub box_length: f64,
    pub time: f64,
    pub mass: f64,
    /// Name of the data file, relative to the manifest.
    pub data: String,
}

/// Writes `<dir>/<stem>.f64` and `<dir>/<stem>.json`; returns the manifest
/// path.
pub fn write_snapshot(dir: &Path, stem: &str, state: &FieldState) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let data_name = format!("{stem}.f64");
    let mut bytes = Vec::with_capacity(8 * state.density.len());
    for v in &state.density {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(dir.join(&data_name))?.write_all(&bytes)?;
    let manifest = SnapshotManifest {
        version: crate::VERSION.to_string(),
        config_hash: format!("{:016x}", state.provenance),
        n: state.grid.n,
        box_length: state.grid.box_length,
        time: state.time,
        mass: state.mass(),
        data: data_name,
    };
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

/// Reads a snapshot back from its manifest path.
pub fn read_snapshot(manifest_path: &Path) -> Result<FieldState> {
    let manifest: SnapshotManifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    let grid = GridSpec::new(manifest.n, manifest.box_length)?;
    let data_path = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.data);
    let mut bytes = Vec::new();
    std::fs::File::open(&data_path)?.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Config(format!(
            "{} holds {} bytes, expected {} for n = {}",
            data_path.display(),
            bytes.len(),
            8 * grid.len(),
            grid.n
        )));
    }
    let density = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let provenance = u64::from_str_radix(&manifest.config_hash, 16)
        .map_err(|e| Error::Config(format!("bad config hash '{}': {e}", manifest.config_hash)))?;
    Ok(FieldState { time: manifest.time, grid, density, provenance })
}
