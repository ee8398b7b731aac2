//! The on-disk run configuration.
//!
//! ```text
//! [run]        seed, output_dir
//! [grid]       n, box_length
//! [solver]     dt, t_end, interaction, poisson, dealias, snapshot_times, snapshot_every
//! [initial]    preset, mass, width, offset
//! [tolerance]  abs, rel
//! [compare]    q, window, time_shift, mode, expansions, window_rule
//! ```
//!
//! Every key except `[grid]`, `[solver] dt`, `[solver] t_end` and
//! `[initial] preset` has a default. The hash of a run is the hash of the
//! fully resolved configuration, so spelling out a default does not change
//! it.

use std::path::PathBuf;

use ddasym::analysis::LqExponent;
use ddasym::config::ConfigFile;
use ddasym::profiles::ExpansionSpec;
use ddasym::solver::{GridSpec, Interaction, PoissonMode, Preset, SolverConfig};
use ddasym::{PrefactorMode, QuadratureSpec};

use crate::{CliError, CliResult};

const KEYS: &[(&str, &str)] = &[
    ("run", "seed"),
    ("run", "output_dir"),
    ("grid", "n"),
    ("grid", "box_length"),
    ("solver", "dt"),
    ("solver", "t_end"),
    ("solver", "interaction"),
    ("solver", "poisson"),
    ("solver", "dealias"),
    ("solver", "snapshot_times"),
    ("solver", "snapshot_every"),
    ("initial", "preset"),
    ("initial", "mass"),
    ("initial", "width"),
    ("initial", "offset"),
    ("tolerance", "abs"),
    ("tolerance", "rel"),
    ("compare", "q"),
    ("compare", "window"),
    ("compare", "time_shift"),
    ("compare", "mode"),
    ("compare", "expansions"),
    ("compare", "window_rule"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Seed for randomly sampled check points.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub interaction: Interaction,
    pub poisson_mode: PoissonMode,
    pub dealias: bool,
    pub snapshot_times: Vec<f64>,
    /// Adds a snapshot at every multiple of this interval.
    pub snapshot_every: Option<f64>,
    pub preset: Preset,
    pub quad: QuadratureSpec,
    pub q_list: Vec<LqExponent>,
    pub window: Option<(f64, f64)>,
    /// Defaults to the preset's `t₀`.
    pub time_shift: Option<f64>,
    pub mode: PrefactorMode,
    pub expansions: Vec<ExpansionSpec>,
    pub window_rule: bool,
}

/// `u0`, `first`, `full`, or terms joined by `+` (`u0+u1odd`).
pub fn parse_expansion(s: &str, mode: PrefactorMode) -> CliResult<ExpansionSpec> {
    let spec = match s.trim() {
        "u0" => ExpansionSpec::u0_only(),
        "first" => ExpansionSpec::first_order(),
        "full" => ExpansionSpec::full(),
        other => {
            let mut e = ExpansionSpec {
                include_u0: false,
                include_u1odd: false,
                include_u1rad: false,
                include_k2log: false,
                prefactor_mode: mode,
            };
            for term in other.split('+').map(str::trim) {
                match term {
                    "u0" => e.include_u0 = true,
                    "u1odd" => e.include_u1odd = true,
                    "u1rad" => e.include_u1rad = true,
                    "k2log" => e.include_k2log = true,
                    _ => {
                        return Err(CliError::Usage(format!(
                            "unknown expansion term '{term}' (expected u0, u1odd, u1rad, k2log)"
                        )))
                    }
                }
            }
            e
        }
    }
    .with_mode(mode);
    spec.validate()?;
    Ok(spec)
}

pub fn parse_q_list(s: &str) -> CliResult<Vec<LqExponent>> {
    Ok(ddasym::config::parse_list(s).map_err(CliError::Usage)?)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn from_file(cfg: &ConfigFile) -> CliResult<Self> {
        cfg.check_keys(KEYS)?;
        let grid = GridSpec::new(cfg.required("grid", "n")?, cfg.required("grid", "box_length")?)?;
        let preset = match cfg.required::<String>("initial", "preset")?.as_str() {
            "centered_gaussian" => Preset::CenteredGaussian {
                mass: cfg.parsed_or("initial", "mass", 1.0)?,
                width: cfg.parsed_or("initial", "width", 1.0)?,
            },
            "offset_gaussian" => {
                let offset: Vec<f64> = cfg.list("initial", "offset")?.unwrap_or_else(|| vec![1.0, 0.0, 0.0]);
                let offset: [f64; 3] = offset
                    .try_into()
                    .map_err(|_| CliError::Usage("[initial] offset needs three components".into()))?;
                Preset::OffsetGaussian {
                    mass: cfg.parsed_or("initial", "mass", 1.0)?,
                    width: cfg.parsed_or("initial", "width", 1.0)?,
                    offset,
                }
            }
            "skewed_blob" => Preset::SkewedBlob { mass: cfg.parsed_or("initial", "mass", 1.0)? },
            other => {
                return Err(CliError::Usage(format!(
                    "unknown preset '{other}' (expected centered_gaussian, offset_gaussian or skewed_blob)"
                )))
            }
        };
        let mode: PrefactorMode = cfg.parsed_or("compare", "mode", PrefactorMode::Oracle)?;
        let expansions = match cfg.list::<String>("compare", "expansions")? {
            Some(list) => list.iter().map(|s| parse_expansion(s, mode)).collect::<CliResult<Vec<_>>>()?,
            None => vec![
                ExpansionSpec::u0_only().with_mode(mode),
                ExpansionSpec::first_order().with_mode(mode),
                ExpansionSpec::full().with_mode(mode),
            ],
        };
        let q_list = match cfg.get("compare", "q") {
            Some(v) => parse_q_list(v)?,
            None => LqExponent::standard(),
        };
        let window = cfg.get("compare", "window").map(crate::parse_window).transpose()?;
        let out = Self {
            seed: cfg.parsed_or("run", "seed", 0)?,
            output_dir: PathBuf::from(cfg.get("run", "output_dir").unwrap_or("out")),
            grid,
            dt: cfg.required("solver", "dt")?,
            t_end: cfg.required("solver", "t_end")?,
            interaction: cfg.parsed_or("solver", "interaction", Interaction::DriftDiffusion)?,
            poisson_mode: cfg.parsed_or("solver", "poisson", PoissonMode::FreeSpacePadded)?,
            dealias: cfg.parsed_or("solver", "dealias", true)?,
            snapshot_times: cfg.list("solver", "snapshot_times")?.unwrap_or_default(),
            snapshot_every: cfg.parsed("solver", "snapshot_every")?,
            preset,
            quad: QuadratureSpec::new(cfg.parsed_or("tolerance", "abs", 1e-9)?, cfg.parsed_or("tolerance", "rel", 1e-10)?),
            q_list,
            window,
            time_shift: cfg.parsed("compare", "time_shift")?,
            mode,
            expansions,
            window_rule: cfg.parsed_or("compare", "window_rule", true)?,
        };
        out.quad.validate()?;
        if let Some(every) = out.snapshot_every {
            if !(every > 0.0) {
                return Err(CliError::Usage(format!("[solver] snapshot_every must be positive, got {every}")));
            }
        }
        out.solver_config().validate()?;
        Ok(out)
    }

    pub fn read(path: &std::path::Path) -> CliResult<Self> {
        if !path.exists() {
            return Err(CliError::Usage(format!("config file {} does not exist", path.display())));
        }
        Self::from_file(&ConfigFile::read(path)?)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        Self::from_file(&ConfigFile::parse(text)?)
    }

    /// The fully resolved configuration.
    pub fn to_config_file(&self) -> ConfigFile {
        let mut c = ConfigFile::new();
        c.set("run", "seed", self.seed.to_string());
        c.set("run", "output_dir", self.output_dir.display().to_string());
        c.set("grid", "n", self.grid.n.to_string());
        c.set("grid", "box_length", self.grid.box_length.to_string());
        c.set("solver", "dt", self.dt.to_string());
        c.set("solver", "t_end", self.t_end.to_string());
        c.set("solver", "interaction", self.interaction.to_string());
        c.set("solver", "poisson", self.poisson_mode.to_string());
        c.set("solver", "dealias", self.dealias.to_string());
        c.set("solver", "snapshot_times", join(&self.snapshot_times));
        if let Some(every) = self.snapshot_every {
            c.set("solver", "snapshot_every", every.to_string());
        }
        match self.preset {
            Preset::CenteredGaussian { mass, width } => {
                c.set("initial", "preset", "centered_gaussian");
                c.set("initial", "mass", mass.to_string());
                c.set("initial", "width", width.to_string());
            }
            Preset::OffsetGaussian { mass, width, offset } => {
                c.set("initial", "preset", "offset_gaussian");
                c.set("initial", "mass", mass.to_string());
                c.set("initial", "width", width.to_string());
                c.set("initial", "offset", join(&offset));
            }
            Preset::SkewedBlob { mass } => {
                c.set("initial", "preset", "skewed_blob");
                c.set("initial", "mass", mass.to_string());
            }
        }
        c.set("tolerance", "abs", self.quad.abs_tol.to_string());
        c.set("tolerance", "rel", self.quad.rel_tol.to_string());
        c.set("compare", "q", join(&self.q_list));
        if let Some((a, b)) = self.window {
            c.set("compare", "window", format!("{a}:{b}"));
        }
        if let Some(s) = self.time_shift {
            c.set("compare", "time_shift", s.to_string());
        }
        c.set("compare", "mode", self.mode.to_string());
        let labels: Vec<String> = self.expansions.iter().map(ExpansionSpec::label).collect();
        c.set("compare", "expansions", labels.join(", "));
        c.set("compare", "window_rule", self.window_rule.to_string());
        c
    }

    pub fn canonical(&self) -> String {
        self.to_config_file().canonical()
    }

    pub fn hash(&self) -> u64 {
        self.to_config_file().hash()
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    pub fn time_shift(&self) -> f64 {
        self.time_shift.unwrap_or_else(|| self.preset.time_shift())
    }

    /// Requested snapshot times, explicit and periodic, merged.
    pub fn all_snapshot_times(&self) -> Vec<f64> {
        let mut times = self.snapshot_times.clone();
        if let Some(every) = self.snapshot_every {
            let count = (self.t_end / every + 1e-9).floor() as usize;
            times.extend((1..=count).map(|k| k as f64 * every));
        }
        times.retain(|&t| t <= self.t_end);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut s = SolverConfig::new(self.grid, self.dt, self.t_end);
        s.interaction = self.interaction;
        s.poisson_mode = self.poisson_mode;
        s.dealias = self.dealias;
        s.snapshot_times = self.all_snapshot_times();
        s.provenance = self.hash();
        s
    }
}
