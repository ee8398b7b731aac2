//! `simulate`: run the solver from a config, write snapshots and a manifest.

use std::path::{Path, PathBuf};

use ddasym::profiles::Moments;
use ddasym::solver::{self, Preset, RunManifest, RunStatus};

use crate::{CliError, CliResult, RunConfig};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const CONFIG_NAME: &str = "config.conf";

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SnapshotEntry {
    pub time: f64,
    /// Snapshot sidecar, relative to the output directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationManifest {
    pub version: String,
    pub config_hash: String,
    pub config: String,
    pub preset: Preset,
    /// Exact moments of the continuous initial data.
    pub moments: Moments,
    pub time_shift: f64,
    pub snapshots: Vec<SnapshotEntry>,
    pub run: RunManifest,
}

impl SimulationManifest {
    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn snapshot_paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.snapshots.iter().map(|s| dir.join(&s.file)).collect()
    }
}

/// Runs `config`, writing `snap_NNNN.{f64,json}`, `config.conf` and
/// `manifest.json` into `out`. On blow-up the manifest is still written
/// and the error names the step.
pub fn cmd_simulate(config: &RunConfig, out: &Path) -> CliResult<SimulationManifest> {
    let solver_config = config.solver_config();
    let initial = solver::init_density(config.grid, config.preset)?;
    std::fs::create_dir_all(out)?;
    crate::write_text(&out.join(CONFIG_NAME), &config.canonical())?;

    let mut snapshots = Vec::new();
    let run = solver::run_with(&solver_config, initial, |state| {
        let stem = format!("snap_{:04}", snapshots.len());
        solver::write_snapshot(out, &stem, state)?;
        snapshots.push(SnapshotEntry { time: state.time, file: format!("{stem}.json") });
        Ok(())
    })?;
    let (m0, m1) = config.preset.moments();
    let manifest = SimulationManifest {
        version: ddasym::VERSION.into(),
        config_hash: config.hash_hex(),
        config: config.canonical(),
        preset: config.preset,
        moments: Moments::new(m0, m1),
        time_shift: config.time_shift(),
        snapshots,
        run,
    };
    crate::write_text(&out.join(MANIFEST_NAME), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    if let RunStatus::BlowUp { step, time } = manifest.run.status {
        return Err(CliError::BlowUp(format!(
            "density became non-finite at step {step} (t = {time}); reduce [solver] dt or the initial mass"
        )));
    }
    Ok(manifest)
}
