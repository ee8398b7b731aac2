//! The field `E = ∇(-Δ)^{-1} u` on the grid.
//!
//! Torus mode multiplies by `iξ/|ξ|²` on the periodic grid with the mean
//! removed. Free-space mode uses an Ewald split with splitting time
//! `τ = h²`:
//!
//! ```text
//! ∇(-Δ)^{-1} = ∇(-Δ)^{-1}(1 - e^{τΔ}) + ∇(-Δ)^{-1} e^{τΔ}
//! ```
//!
//! The first part has a kernel that decays like a Gaussian of width `~h`,
//! so it is applied spectrally. The second part is convolution with the
//! closed-form field of `G(τ)`, which is smooth on the grid scale and is
//! applied as an aperiodic (Hockney) convolution on a doubled grid. Both
//! pieces are folded into one purely imaginary multiplier on the doubled
//! grid.

use num_complex::Complex64;
use rayon::prelude::*;

use super::GridSpec;
use crate::fft::{signed_index, Fft3};
use crate::kernel::{field_of_gaussian_closed, SpaceTimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMode {
    /// Periodic inversion with the zero mode removed.
    TorusNeutralized,
    /// Aperiodic convolution on a zero-padded doubled grid.
    FreeSpacePadded,
}

impl std::str::FromStr for PoissonMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "torus_neutralized" => Ok(Self::TorusNeutralized),
            "free_space_padded" => Ok(Self::FreeSpacePadded),
            other => Err(crate::Error::Config(format!(
                "unknown poisson mode '{other}' (expected torus_neutralized or free_space_padded)"
            ))),
        }
    }
}

impl std::fmt::Display for PoissonMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::TorusNeutralized => "torus_neutralized",
            Self::FreeSpacePadded => "free_space_padded",
        })
    }
}

/// Wavenumber on an axis of `m` points with spacing `h`; the Nyquist mode
/// gets zero so that odd derivatives of real data stay real.
pub(crate) fn odd_wavenumber(k: usize, m: usize, h: f64) -> f64 {
    if k == m / 2 {
        0.0
    } else {
        2.0 * std::f64::consts::PI * signed_index(k, m) as f64 / (m as f64 * h)
    }
}

pub(crate) fn wavenumber(k: usize, m: usize, h: f64) -> f64 {
    2.0 * std::f64::consts::PI * signed_index(k, m) as f64 / (m as f64 * h)
}

/// Precomputed field operator for one grid and mode.
#[derive(Debug)]
pub struct FieldSolver {
    grid: GridSpec,
    mode: PoissonMode,
    base: Fft3,
    padded: Option<Fft3>,
    /// Imaginary parts of the three multipliers, on whichever grid applies.
    multiplier: [Vec<f64>; 3],
}

impl FieldSolver {
    pub fn new(grid: GridSpec, mode: PoissonMode) -> Self {
        let n = grid.n;
        let base = Fft3::new(n);
        match mode {
            PoissonMode::TorusNeutralized => {
                let multiplier = torus_multiplier(&grid);
                Self { grid, mode, base, padded: None, multiplier }
            }
            PoissonMode::FreeSpacePadded => {
                let padded = Fft3::new(2 * n);
                let multiplier = free_space_multiplier(&grid, &padded);
                Self { grid, mode, base, padded: Some(padded), multiplier }
            }
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn mode(&self) -> PoissonMode {
        self.mode
    }

    pub(crate) fn base_fft(&self) -> &Fft3 {
        &self.base
    }

    /// Field of a real density given on the grid.
    pub fn field(&self, density: &[f64]) -> [Vec<f64>; 3] {
        let mut out = self.empty_field();
        self.field_into(density, None, self.grid.n / 2, &mut out, &mut FieldScratch::default());
        out
    }

    /// Field from the half spectrum of the density on the base grid. In
    /// free-space mode the density is reconstructed first.
    pub fn field_from_spectrum(&self, spec: &[Complex64]) -> [Vec<f64>; 3] {
        let mut out = self.empty_field();
        let mut ws = FieldScratch::default();
        match &self.padded {
            None => self.field_into(&[], Some(spec), self.grid.n / 2, &mut out, &mut ws),
            Some(_) => {
                let mut tmp = spec.to_vec();
                let mut u = vec![0.0; self.grid.len()];
                self.base.inverse(&mut tmp, &mut u);
                self.field_into(&u, None, self.grid.n / 2, &mut out, &mut ws);
            }
        }
        out
    }

    fn empty_field(&self) -> [Vec<f64>; 3] {
        let len = self.grid.len();
        [vec![0.0; len], vec![0.0; len], vec![0.0; len]]
    }

    /// Writes the field into `out`, reusing the buffers in `ws`. On the
    /// torus `density_hat`, when given, replaces a forward transform of
    /// `density`; free-space mode always transforms `density`. On the
    /// torus the density spectrum must vanish outside `band`.
    pub(crate) fn field_into(
        &self,
        density: &[f64],
        density_hat: Option<&[Complex64]>,
        band: usize,
        out: &mut [Vec<f64>; 3],
        ws: &mut FieldScratch,
    ) {
        let (fft, embedded) = match &self.padded {
            None => (&self.base, false),
            Some(p) => (p, true),
        };
        let len = fft.spectrum_len();
        ws.hat.resize(len, Complex64::new(0.0, 0.0));
        ws.spec.resize(len, Complex64::new(0.0, 0.0));
        let hat: &[Complex64] = match (embedded, density_hat) {
            (false, Some(h)) => h,
            (false, None) => {
                fft.forward(density, &mut ws.hat);
                &ws.hat
            }
            (true, _) => {
                fft.forward_embedded(density, &mut ws.hat);
                &ws.hat
            }
        };
        for (j, o) in out.iter_mut().enumerate() {
            ws.spec
                .par_iter_mut()
                .zip(hat.par_iter())
                .zip(self.multiplier[j].par_iter())
                .for_each(|((s, v), m)| *s = Complex64::new(-m * v.im, m * v.re));
            if embedded {
                fft.inverse_embedded(&mut ws.spec, o);
            } else {
                fft.inverse_band(&mut ws.spec, o, band);
            }
        }
    }
}

/// Reusable spectra for [`FieldSolver::field_into`].
#[derive(Debug, Default)]
pub(crate) struct FieldScratch {
    hat: Vec<Complex64>,
    spec: Vec<Complex64>,
}

fn torus_multiplier(grid: &GridSpec) -> [Vec<f64>; 3] {
    let (n, h) = (grid.n, grid.spacing());
    let hx = n / 2 + 1;
    let mut out = [vec![0.0; hx * n * n], vec![0.0; hx * n * n], vec![0.0; hx * n * n]];
    for kz in 0..n {
        for ky in 0..n {
            for kx in 0..hx {
                let xi = [wavenumber(kx, n, h), wavenumber(ky, n, h), wavenumber(kz, n, h)];
                let k2: f64 = xi.iter().map(|v| v * v).sum();
                if k2 == 0.0 {
                    continue;
                }
                let odd = [odd_wavenumber(kx, n, h), odd_wavenumber(ky, n, h), odd_wavenumber(kz, n, h)];
                let idx = kx + hx * (ky + n * kz);
                for j in 0..3 {
                    out[j][idx] = odd[j] / k2;
                }
            }
        }
    }
    out
}

fn free_space_multiplier(grid: &GridSpec, padded: &Fft3) -> [Vec<f64>; 3] {
    let (n, h) = (grid.n, grid.spacing());
    let m = 2 * n;
    let tau = h * h;
    let cell = h * h * h;
    // Long-range kernel: h³ times the field of G(τ) at every displacement
    // in [-n, n) per axis, stored periodically; the unused -n slot is zero.
    let mut kernels = [vec![0.0; m * m * m], vec![0.0; m * m * m], vec![0.0; m * m * m]];
    let plane = m * m;
    let planes: Vec<[Vec<f64>; 3]> = (0..m)
        .into_par_iter()
        .map(|z| {
            let mut k = [vec![0.0; plane], vec![0.0; plane], vec![0.0; plane]];
            let dz = signed_index(z, m);
            if z == n {
                return k;
            }
            for y in 0..m {
                if y == n {
                    continue;
                }
                let dy = signed_index(y, m);
                for x in 0..m {
                    if x == n {
                        continue;
                    }
                    let dx = signed_index(x, m);
                    let d = [dx as f64 * h, dy as f64 * h, dz as f64 * h];
                    let e = field_of_gaussian_closed(SpaceTimePoint::new(tau, d))
                        .expect("positive splitting time");
                    for j in 0..3 {
                        k[j][x + m * y] = cell * e[j];
                    }
                }
            }
            k
        })
        .collect();
    for (z, p) in planes.into_iter().enumerate() {
        for j in 0..3 {
            kernels[j][plane * z..plane * (z + 1)].copy_from_slice(&p[j]);
        }
    }
    let hx = padded.half();
    let mut out: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut spec = padded.zeroed_spectrum();
    for j in 0..3 {
        padded.forward(&kernels[j], &mut spec);
        kernels[j] = Vec::new();
        // The kernel is odd in d_j, so its transform is purely imaginary.
        out[j] = spec.iter().map(|c| c.im).collect();
    }
    for kz in 0..m {
        for ky in 0..m {
            for kx in 0..hx {
                let xi = [wavenumber(kx, m, h), wavenumber(ky, m, h), wavenumber(kz, m, h)];
                let k2: f64 = xi.iter().map(|v| v * v).sum();
                if k2 == 0.0 {
                    continue;
                }
                let odd = [odd_wavenumber(kx, m, h), odd_wavenumber(ky, m, h), odd_wavenumber(kz, m, h)];
                let short = (1.0 - (-k2 * tau).exp()) / k2;
                let idx = kx + hx * (ky + m * kz);
                for j in 0..3 {
                    out[j][idx] += odd[j] * short;
                }
            }
        }
    }
    out
}
