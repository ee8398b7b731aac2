//! Pseudospectral solver for `∂_t u - Δu = s ∇·(u ∇(-Δ)^{-1}u)` on a
//! periodic box, `s = +1` for drift-diffusion and `s = -1` for the
//! Keller–Segel sign.
//!
//! Time stepping is the integrating-factor Heun scheme: with
//! `E = e^{-|ξ|² dt}` and `N` the transformed nonlinear term,
//!
//! ```text
//! û₁     = E (ûₙ + dt N(ûₙ))
//! ûₙ₊₁   = E ûₙ + dt/2 (E N(ûₙ) + N(û₁))
//! ```
//!
//! Diffusion is exact, and the zero mode of `N` is identically zero, so the
//! mass only changes by roundoff.
//!
//! The box center (index `n/2` on every axis) is the origin `x = 0`.

mod poisson;
mod snapshot;

use num_complex::Complex64;
use rayon::prelude::*;

pub use poisson::{FieldSolver, PoissonMode};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotManifest};

use crate::error::{Error, Result};
use crate::fft::signed_index;
use crate::kernel::gaussian;
use poisson::{odd_wavenumber, wavenumber, FieldScratch};

/// `t·(π/h)²` below this leaves a Gaussian `G(t)` with more than about
/// `1e-12` of its spectrum beyond the grid Nyquist frequency.
pub const RESOLUTION_GUARD: f64 = 27.6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub box_length: f64,
}

impl GridSpec {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        let g = Self { n, box_length };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 32 || !self.n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 32, got {}",
                self.n
            )));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(Error::Config(format!("box length must be positive, got {}", self.box_length)));
        }
        if self.spacing() >= 1.0 {
            return Err(Error::Config(format!(
                "grid spacing L/n = {} must be below 1",
                self.spacing()
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of index `i` along one axis, origin at index `n/2`.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n * (y + self.n * z)
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.coord(idx % n), self.coord((idx / n) % n), self.coord(idx / (n * n))]
    }

    /// Integer offsets from the origin, for exact radius keys.
    pub fn offsets(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        let c = (n / 2) as i64;
        [(idx % n) as i64 - c, ((idx / n) % n) as i64 - c, (idx / (n * n)) as i64 - c]
    }

    /// Largest `t` for which `6√t < L/4` (the valid-window rule).
    pub fn window_limit(&self) -> f64 {
        (self.box_length / 24.0).powi(2)
    }

    /// Smallest Gaussian time parameter the grid resolves.
    pub fn min_resolved_time(&self) -> f64 {
        RESOLUTION_GUARD * (self.spacing() / std::f64::consts::PI).powi(2)
    }
}

/// Sign in front of the nonlinear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    /// `+1`: repulsive, the drift-diffusion equation.
    DriftDiffusion,
    /// `-1`: attractive, the Keller–Segel sign.
    KellerSegel,
    /// `0`: pure heat flow.
    Disabled,
}

impl Interaction {
    pub fn sign(self) -> f64 {
        match self {
            Self::DriftDiffusion => 1.0,
            Self::KellerSegel => -1.0,
            Self::Disabled => 0.0,
        }
    }
}

impl std::str::FromStr for Interaction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drift_diffusion" | "+1" | "1" => Ok(Self::DriftDiffusion),
            "keller_segel" | "-1" => Ok(Self::KellerSegel),
            "disabled" | "0" => Ok(Self::Disabled),
            other => Err(Error::Config(format!(
                "unknown interaction '{other}' (expected drift_diffusion, keller_segel or disabled)"
            ))),
        }
    }
}

impl std::fmt::Display for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DriftDiffusion => "drift_diffusion",
            Self::KellerSegel => "keller_segel",
            Self::Disabled => "disabled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub interaction: Interaction,
    pub poisson_mode: PoissonMode,
    pub dealias: bool,
    pub snapshot_times: Vec<f64>,
    /// Hash stamped on every state produced under this configuration.
    pub provenance: u64,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            dt,
            t_end,
            interaction: Interaction::DriftDiffusion,
            poisson_mode: PoissonMode::FreeSpacePadded,
            dealias: true,
            snapshot_times: Vec::new(),
            provenance: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        let mut last = 0.0;
        for &t in &self.snapshot_times {
            if !(t >= last) || t > self.t_end {
                return Err(Error::Config(format!(
                    "snapshot times must be ascending within [0, t_end], got {:?}",
                    self.snapshot_times
                )));
            }
            last = t;
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// One density snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub grid: GridSpec,
    pub density: Vec<f64>,
    pub provenance: u64,
}

impl FieldState {
    pub fn zeros(grid: GridSpec, time: f64) -> Self {
        Self { time, grid, density: vec![0.0; grid.len()], provenance: 0 }
    }

    /// Samples `f` at every grid point (coordinates relative to the center).
    pub fn from_fn(grid: GridSpec, time: f64, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let density = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        Self { time, grid, density, provenance: 0 }
    }

    /// Riemann sum of the density; summed plane by plane in a fixed order.
    pub fn mass(&self) -> f64 {
        let plane = self.grid.n * self.grid.n;
        let partial: Vec<f64> = self.density.par_chunks(plane).map(|c| c.iter().sum()).collect();
        partial.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.density
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn is_finite(&self) -> bool {
        self.density.iter().all(|v| v.is_finite())
    }
}

/// Initial data presets. `width` is the time parameter `t₀` of the Gaussian
/// `G(t₀, ·)`, so the standard deviation per axis is `√(2t₀)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    CenteredGaussian { mass: f64, width: f64 },
    OffsetGaussian { mass: f64, width: f64, offset: [f64; 3] },
    /// Two unequal Gaussians, neither centered; `M₁ ≠ 0` and not radial.
    SkewedBlob { mass: f64 },
}

const SKEW: [(f64, f64, [f64; 3]); 2] = [(0.7, 1.0, [0.5, 0.0, 0.0]), (0.3, 0.8, [-0.8, 0.4, 0.0])];

impl Preset {
    pub fn mass(&self) -> f64 {
        match *self {
            Preset::CenteredGaussian { mass, .. }
            | Preset::OffsetGaussian { mass, .. }
            | Preset::SkewedBlob { mass } => mass,
        }
    }

    /// `(weight, t₀, center)` of each Gaussian component.
    fn components(&self) -> Vec<(f64, f64, [f64; 3])> {
        match *self {
            Preset::CenteredGaussian { mass, width } => vec![(mass, width, [0.0; 3])],
            Preset::OffsetGaussian { mass, width, offset } => vec![(mass, width, offset)],
            Preset::SkewedBlob { mass } => SKEW.iter().map(|&(w, t, c)| (w * mass, t, c)).collect(),
        }
    }

    /// Exact `(M₀, M₁)` of the continuous preset, `M₁ = -∫ x u₀`.
    pub fn moments(&self) -> (f64, [f64; 3]) {
        let comps = self.components();
        let m0 = comps.iter().map(|c| c.0).sum();
        let mut m1 = [0.0; 3];
        for (w, _, c) in comps {
            for j in 0..3 {
                m1[j] -= w * c[j];
            }
        }
        (m0, m1)
    }

    /// Time parameter of the widest component.
    pub fn time_shift(&self) -> f64 {
        self.components().iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

/// Samples a preset on the grid.
pub fn init_density(grid: GridSpec, preset: Preset) -> Result<FieldState> {
    grid.validate()?;
    let mass = preset.mass();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Config(format!("preset mass must be positive, got {mass}")));
    }
    let comps = preset.components();
    let half = grid.box_length / 2.0;
    for &(_, t0, c) in &comps {
        if !(t0 > 0.0) || t0 < grid.min_resolved_time() {
            return Err(Error::Config(format!(
                "width t0 = {t0} is not resolved by spacing {} (need t0 >= {:.4})",
                grid.spacing(),
                grid.min_resolved_time()
            )));
        }
        let reach = c.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 6.0 * t0.sqrt();
        if reach > half {
            return Err(Error::Config(format!(
                "preset support reaches {reach:.3}, beyond the half box {half}"
            )));
        }
    }
    Ok(FieldState::from_fn(grid, 0.0, |x| {
        comps
            .iter()
            .map(|&(w, t0, c)| {
                let r2 = (0..3).map(|j| (x[j] - c[j]).powi(2)).sum();
                w * gaussian(t0, r2)
            })
            .sum()
    }))
}

/// Spectral stepping machinery for one configuration.
#[derive(Debug)]
pub struct Solver {
    config: SolverConfig,
    fields: FieldSolver,
    /// `|ξ|²` on the half spectrum.
    k2: Vec<f64>,
    /// Odd-derivative wavenumbers per axis on the half spectrum.
    ik: [Vec<f64>; 3],
    keep: Vec<bool>,
    /// Largest |index| per axis that survives the dealias mask.
    band: usize,
    /// `e^{-|ξ|² dt}` for the configured `dt`.
    decay: Vec<f64>,
    work: std::sync::Mutex<(Stages, Work)>,
}

/// Spectra of one Heun step.
#[derive(Debug, Default)]
struct Stages {
    a: Vec<Complex64>,
    u1: Vec<Complex64>,
    na: Vec<Complex64>,
    nb: Vec<Complex64>,
}

/// Buffers of one nonlinear evaluation.
#[derive(Debug, Default)]
struct Work {
    filtered: Vec<Complex64>,
    tmp: Vec<Complex64>,
    f_hat: Vec<Complex64>,
    u: Vec<f64>,
    flux: Vec<f64>,
    e: [Vec<f64>; 3],
    field: FieldScratch,
}

fn sized<T: Clone + Default>(v: &mut Vec<T>, len: usize) {
    v.resize(len, T::default());
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let fields = FieldSolver::new(grid, config.poisson_mode);
        let (n, h) = (grid.n, grid.spacing());
        let hx = n / 2 + 1;
        let len = hx * n * n;
        let mut k2 = vec![0.0; len];
        let mut ik = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut keep = vec![true; len];
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..hx {
                    let idx = kx + hx * (ky + n * kz);
                    let xi = [wavenumber(kx, n, h), wavenumber(ky, n, h), wavenumber(kz, n, h)];
                    k2[idx] = xi.iter().map(|v| v * v).sum();
                    ik[0][idx] = odd_wavenumber(kx, n, h);
                    ik[1][idx] = odd_wavenumber(ky, n, h);
                    ik[2][idx] = odd_wavenumber(kz, n, h);
                    if config.dealias {
                        keep[idx] = [kx, ky, kz]
                            .iter()
                            .all(|&k| 3 * (signed_index(k, n).unsigned_abs() as usize) < n);
                    }
                }
            }
        }
        let decay = k2.iter().map(|k| (-k * config.dt).exp()).collect();
        let band = if config.dealias { (n - 1) / 3 } else { n / 2 };
        Ok(Self { config, fields, k2, ik, keep, band, decay, work: Default::default() })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn field_solver(&self) -> &FieldSolver {
        &self.fields
    }

    /// `s ∇·(u E)` in spectral form into `out`, dealiased if configured.
    /// Returns `max |E|`.
    fn nonlinear(&self, u_hat: &[Complex64], out: &mut [Complex64], w: &mut Work) -> f64 {
        let sign = self.config.interaction.sign();
        let zero = Complex64::new(0.0, 0.0);
        if sign == 0.0 {
            out.fill(zero);
            return 0.0;
        }
        let fft = self.fields.base_fft();
        let (len, n3) = (u_hat.len(), self.config.grid.len());
        sized(&mut w.filtered, len);
        sized(&mut w.tmp, len);
        sized(&mut w.f_hat, len);
        sized(&mut w.u, n3);
        sized(&mut w.flux, n3);
        for e in w.e.iter_mut() {
            sized(e, n3);
        }
        w.filtered
            .par_iter_mut()
            .zip(u_hat.par_iter())
            .zip(self.keep.par_iter())
            .for_each(|((f, v), &k)| *f = if k { *v } else { zero });
        w.tmp.copy_from_slice(&w.filtered);
        fft.inverse_band(&mut w.tmp, &mut w.u, self.band);
        let hat = match self.fields.mode() {
            PoissonMode::TorusNeutralized => Some(&w.filtered[..]),
            PoissonMode::FreeSpacePadded => None,
        };
        self.fields.field_into(&w.u, hat, self.band, &mut w.e, &mut w.field);
        let e = &w.e;
        let max_field = (0..n3)
            .into_par_iter()
            .map(|i| (e[0][i] * e[0][i] + e[1][i] * e[1][i] + e[2][i] * e[2][i]).sqrt())
            .reduce(|| 0.0, f64::max);
        out.fill(zero);
        for j in 0..3 {
            w.flux.par_iter_mut().zip(w.u.par_iter()).zip(w.e[j].par_iter()).for_each(|((f, a), b)| *f = a * b);
            fft.forward_band(&w.flux, &mut w.f_hat, self.band);
            out.par_iter_mut()
                .zip(w.f_hat.par_iter())
                .zip(self.ik[j].par_iter())
                .for_each(|((a, f), k)| *a += Complex64::new(-k * f.im, k * f.re));
        }
        out.par_iter_mut()
            .zip(self.keep.par_iter())
            .zip(self.k2.par_iter())
            .for_each(|((a, &k), &kk)| *a = if !k || kk == 0.0 { zero } else { *a * sign });
        max_field
    }

    fn check_cfl(&self, max_field: f64, dt: f64) -> Result<()> {
        let h = self.config.grid.spacing();
        if max_field > 0.0 && dt > 0.25 * h / max_field {
            return Err(Error::Config(format!(
                "dt = {dt} violates the advective limit 0.25·h/max|E| = {}",
                0.25 * h / max_field
            )));
        }
        Ok(())
    }

    /// Advances `state` by `dt`. The step index is only used for errors.
    pub fn step_by(&self, state: &FieldState, dt: f64, index: usize) -> Result<FieldState> {
        let fresh;
        let decay: &[f64] = if dt == self.config.dt {
            &self.decay
        } else {
            fresh = self.k2.iter().map(|k| (-k * dt).exp()).collect::<Vec<f64>>();
            &fresh
        };
        let fft = self.fields.base_fft();
        let mut guard = self.work.lock().unwrap_or_else(|e| e.into_inner());
        let (st, w) = &mut *guard;
        let len = fft.spectrum_len();
        for v in [&mut st.a, &mut st.u1, &mut st.na, &mut st.nb] {
            sized(v, len);
        }
        fft.forward(&state.density, &mut st.a);
        let max_field = self.nonlinear(&st.a, &mut st.na, w);
        self.check_cfl(max_field, dt)?;
        st.u1
            .par_iter_mut()
            .zip(st.a.par_iter())
            .zip(st.na.par_iter())
            .zip(decay.par_iter())
            .for_each(|(((u, a), n), e)| *u = (a + n * dt) * e);
        self.nonlinear(&st.u1, &mut st.nb, w);
        // the next spectrum overwrites a, then is consumed by the inverse
        st.a.par_iter_mut()
            .zip(st.na.par_iter())
            .zip(st.nb.par_iter())
            .zip(decay.par_iter())
            .for_each(|(((a, na), nb), e)| *a = *a * e + (na * e + nb) * (0.5 * dt));
        let mut density = vec![0.0; self.config.grid.len()];
        fft.inverse(&mut st.a, &mut density);
        let time = state.time + dt;
        let out = FieldState { time, grid: state.grid, density, provenance: self.config.provenance };
        if !out.is_finite() {
            return Err(Error::BlowUp { step: index, time });
        }
        Ok(out)
    }

    pub fn step(&self, state: &FieldState) -> Result<FieldState> {
        self.step_by(state, self.config.dt, 0)
    }
}

/// One step under `config`; builds the spectral operators each call, so
/// loops should hold a [`Solver`] instead.
pub fn step(state: &FieldState, config: &SolverConfig) -> Result<FieldState> {
    Solver::new(config.clone())?.step(state)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp { step: usize, time: f64 },
}

/// Per-step diagnostics of a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub min_density: f64,
    pub max_density: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub config: SolverConfig,
    pub steps: usize,
    pub snapshot_times: Vec<f64>,
    pub trace: Vec<TracePoint>,
    pub status: RunStatus,
}

impl RunManifest {
    /// Largest relative deviation of the mass trace from its first entry.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.trace.first().map(|p| p.mass).unwrap_or(0.0);
        self.trace
            .iter()
            .map(|p| (p.mass - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Steps from `initial` to `t_end`, handing each snapshot to `emit` as soon
/// as it exists. The initial and final states are always emitted; each
/// requested time is served by the nearest step, whose exact time is
/// recorded. A blow-up stops the run and is reported in the manifest.
pub fn run_with(
    config: &SolverConfig,
    initial: FieldState,
    mut emit: impl FnMut(&FieldState) -> Result<()>,
) -> Result<RunManifest> {
    let solver = Solver::new(config.clone())?;
    let steps = config.step_count();
    let step_time = |k: usize| (k as f64 * config.dt).min(config.t_end);
    // Map each requested time to its nearest step.
    let mut wanted: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|&t| ((t / config.dt).round() as usize).min(steps))
        .collect();
    wanted.push(0);
    wanted.push(steps);
    wanted.sort_unstable();
    wanted.dedup();

    let mut state = initial;
    state.provenance = config.provenance;
    let mut manifest = RunManifest {
        version: crate::VERSION.to_string(),
        config_hash: format!("{:016x}", config.provenance),
        config: config.clone(),
        steps,
        snapshot_times: Vec::new(),
        trace: Vec::new(),
        status: RunStatus::Completed,
    };
    let record = |m: &mut RunManifest, s: &FieldState, k: usize| {
        let (lo, hi) = s.min_max();
        m.trace.push(TracePoint { step: k, time: s.time, mass: s.mass(), min_density: lo, max_density: hi });
    };
    record(&mut manifest, &state, 0);
    let mut next = wanted.iter().peekable();
    if next.peek() == Some(&&0) {
        emit(&state)?;
        manifest.snapshot_times.push(state.time);
        next.next();
    }
    for k in 1..=steps {
        let dt = step_time(k) - step_time(k - 1);
        match solver.step_by(&state, dt, k) {
            Ok(s) => state = s,
            Err(Error::BlowUp { step, time }) => {
                manifest.status = RunStatus::BlowUp { step, time };
                return Ok(manifest);
            }
            Err(e) => return Err(e),
        }
        state.time = step_time(k);
        record(&mut manifest, &state, k);
        if next.peek() == Some(&&k) {
            emit(&state)?;
            manifest.snapshot_times.push(state.time);
            next.next();
        }
    }
    Ok(manifest)
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<FieldState>,
    pub manifest: RunManifest,
}

/// [`run_with`] collecting the snapshots in memory; a blow-up becomes an
/// error.
pub fn run(config: &SolverConfig, initial: FieldState) -> Result<RunOutput> {
    let mut snapshots = Vec::new();
    let manifest = run_with(config, initial, |s| {
        snapshots.push(s.clone());
        Ok(())
    })?;
    if let RunStatus::BlowUp { step, time } = manifest.status {
        return Err(Error::BlowUp { step, time });
    }
    Ok(RunOutput { snapshots, manifest })
}
