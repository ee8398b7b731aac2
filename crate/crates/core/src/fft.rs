//! Real 3D FFTs on cubic grids in x-fastest layout.
//!
//! The half spectrum has shape `(m/2+1) × m × m`, index
//! `kx + (m/2+1)·(ky + m·kz)`. The inverse is normalised by `1/m³`.
//! The `embedded` variants treat the input as an `n³` block in the low
//! corner of an `m³ = (2n)³` zero-padded grid and skip the all-zero lines,
//! which is what free-space convolution needs.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    m: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Transposed copy used by the z pass, kept between calls.
    scratch: Mutex<Vec<Complex64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("m", &self.m).finish()
    }
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        assert!(m >= 2 && m % 2 == 0, "grid size must be even");
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Self {
            m,
            r2c: rp.plan_fft_forward(m),
            c2r: rp.plan_fft_inverse(m),
            fwd: cp.plan_fft_forward(m),
            inv: cp.plan_fft_inverse(m),
            scratch: Mutex::new(Vec::new()),
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// Length of the x axis of the half spectrum.
    pub fn half(&self) -> usize {
        self.m / 2 + 1
    }

    pub fn spectrum_len(&self) -> usize {
        self.half() * self.m * self.m
    }

    pub fn zeroed_spectrum(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.spectrum_len()]
    }

    /// Full forward transform of an `m³` real array.
    pub fn forward(&self, input: &[f64], out: &mut [Complex64]) {
        self.forward_band(input, out, self.m / 2);
    }

    /// Forward transform computing only the modes whose signed indices are
    /// all at most `band` in magnitude; the rest of `out` is zeroed.
    pub fn forward_band(&self, input: &[f64], out: &mut [Complex64], band: usize) {
        let m = self.m;
        assert_eq!(input.len(), m * m * m);
        self.forward_impl(input, m, out, band);
    }

    /// Forward transform of an `n³` block (`n = m/2`) zero-padded to `m³`.
    pub fn forward_embedded(&self, input: &[f64], out: &mut [Complex64]) {
        let n = self.m / 2;
        assert_eq!(input.len(), n * n * n);
        self.forward_impl(input, n, out, self.m / 2);
    }

    /// Full inverse transform; `spec` is used as scratch.
    pub fn inverse(&self, spec: &mut [Complex64], out: &mut [f64]) {
        self.inverse_band(spec, out, self.m / 2);
    }

    /// Inverse transform of a spectrum that is zero outside `band` (see
    /// [`Fft3::forward_band`]); `spec` is used as scratch.
    pub fn inverse_band(&self, spec: &mut [Complex64], out: &mut [f64], band: usize) {
        let m = self.m;
        assert_eq!(out.len(), m * m * m);
        self.inverse_impl(spec, m, out, band);
    }

    /// Inverse transform keeping only the low `n³` corner (`n = m/2`).
    pub fn inverse_embedded(&self, spec: &mut [Complex64], out: &mut [f64]) {
        let n = self.m / 2;
        assert_eq!(out.len(), n * n * n);
        self.inverse_impl(spec, n, out, self.m / 2);
    }

    fn in_band(&self, k: usize, band: usize) -> bool {
        signed_index(k, self.m).unsigned_abs() as usize <= band
    }

    /// `input` holds a `k³` block with `k ≤ m`, x fastest.
    fn forward_impl(&self, input: &[f64], k: usize, out: &mut [Complex64], band: usize) {
        let (m, h) = (self.m, self.half());
        let cols = h.min(band + 1);
        assert_eq!(out.len(), self.spectrum_len());
        let plane = h * m;
        out.par_chunks_mut(plane).enumerate().for_each_init(
            || (vec![0.0; m], self.r2c.make_scratch_vec()),
            |(row, scratch), (z, out_plane)| {
                out_plane.fill(Complex64::new(0.0, 0.0));
                if z >= k {
                    return;
                }
                for y in 0..k {
                    row[..k].copy_from_slice(&input[k * (y + k * z)..][..k]);
                    row[k..].fill(0.0);
                    self.r2c
                        .process_with_scratch(row, &mut out_plane[h * y..h * (y + 1)], scratch)
                        .expect("r2c length");
                }
                transform_y(&*self.fwd, out_plane, h, m, cols);
            },
        );
        self.transform_z(&*self.fwd, out, band, true);
    }

    /// In-place transform along z of the whole half spectrum: gather each
    /// y-row of all z-planes into the scratch as `(x, z)` lines, transform,
    /// then scatter back plane by plane. Only lines inside `band` are
    /// touched; with `zero_rest` everything outside it is cleared.
    fn transform_z(&self, fft: &dyn Fft<f64>, data: &mut [Complex64], band: usize, zero_rest: bool) {
        let (m, h) = (self.m, self.half());
        let plane = h * m;
        let cols = h.min(band + 1);
        let zero = Complex64::new(0.0, 0.0);
        let mut guard = self.scratch.lock().unwrap_or_else(|e| e.into_inner());
        let scratch = &mut *guard;
        scratch.resize(plane * m, zero);
        let src: &[Complex64] = data;
        scratch.par_chunks_mut(plane).enumerate().for_each(|(y, buf)| {
            if !self.in_band(y, band) {
                return;
            }
            let buf = &mut buf[..cols * m];
            for z in 0..m {
                let row = &src[plane * z + h * y..][..cols];
                for x in 0..cols {
                    buf[x * m + z] = row[x];
                }
            }
            fft.process(buf);
        });
        let lines: &[Complex64] = scratch;
        data.par_chunks_mut(plane).enumerate().for_each(|(z, dst)| {
            if zero_rest && !self.in_band(z, band) {
                dst.fill(zero);
                return;
            }
            for y in 0..m {
                let row = &mut dst[h * y..][..h];
                if !self.in_band(y, band) {
                    if zero_rest {
                        row.fill(zero);
                    }
                    continue;
                }
                let buf = &lines[plane * y..][..plane];
                for x in 0..cols {
                    row[x] = buf[x * m + z];
                }
                if zero_rest {
                    row[cols..].fill(zero);
                }
            }
        });
    }

    fn inverse_impl(&self, spec: &mut [Complex64], k: usize, out: &mut [f64], band: usize) {
        let (m, h) = (self.m, self.half());
        assert_eq!(spec.len(), self.spectrum_len());
        self.transform_z(&*self.inv, spec, band, false);
        let cols = h.min(band + 1);
        let plane = h * m;
        let norm = 1.0 / (m * m * m) as f64;
        spec.par_chunks_mut(plane)
            .zip(out.par_chunks_mut(k * k))
            .for_each_init(
                || (vec![0.0; m], self.c2r.make_scratch_vec()),
                |(row, scratch), (spec_plane, out_plane)| {
                    transform_y(&*self.inv, spec_plane, h, m, cols);
                    for y in 0..k {
                        let line = &mut spec_plane[h * y..h * (y + 1)];
                        line[0].im = 0.0;
                        line[h - 1].im = 0.0;
                        self.c2r
                            .process_with_scratch(line, row, scratch)
                            .expect("c2r length");
                        for (o, v) in out_plane[k * y..k * (y + 1)].iter_mut().zip(row.iter()) {
                            *o = v * norm;
                        }
                    }
                },
            );
    }
}

/// In-place transform along y of the first `cols` columns of one `h × m`
/// plane (x fastest).
fn transform_y(fft: &dyn Fft<f64>, plane: &mut [Complex64], h: usize, m: usize, cols: usize) {
    let mut buf = vec![Complex64::new(0.0, 0.0); cols * m];
    for y in 0..m {
        for x in 0..cols {
            buf[x * m + y] = plane[x + h * y];
        }
    }
    fft.process(&mut buf);
    for y in 0..m {
        for x in 0..cols {
            plane[x + h * y] = buf[x * m + y];
        }
    }
}

/// Signed wavenumber of index `k` on an axis of `m` points.
pub fn signed_index(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize) -> Vec<f64> {
        (0..m * m * m)
            .map(|i| ((i as f64 * 0.37).sin() + (i % 7) as f64 * 0.1).cos())
            .collect()
    }

    #[test]
    fn round_trip() {
        let m = 8;
        let fft = Fft3::new(m);
        let u = sample(m);
        let mut s = fft.zeroed_spectrum();
        fft.forward(&u, &mut s);
        let mut back = vec![0.0; m * m * m];
        fft.inverse(&mut s, &mut back);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn band_limited_transforms_match_masked_full_ones() {
        let m = 16;
        let band = 5;
        let fft = Fft3::new(m);
        let h = fft.half();
        let u = sample(m);
        let (mut full, mut cut) = (fft.zeroed_spectrum(), fft.zeroed_spectrum());
        fft.forward(&u, &mut full);
        fft.forward_band(&u, &mut cut, band);
        for kz in 0..m {
            for ky in 0..m {
                for kx in 0..h {
                    let i = kx + h * (ky + m * kz);
                    if [kx, ky, kz].iter().all(|&k| fft.in_band(k, band)) {
                        assert_eq!(cut[i], full[i]);
                    } else {
                        assert_eq!(cut[i], Complex64::new(0.0, 0.0));
                        full[i] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        let (mut a, mut b) = (vec![0.0; m * m * m], vec![0.0; m * m * m]);
        fft.inverse(&mut full, &mut a);
        fft.inverse_band(&mut cut, &mut b, band);
        assert_eq!(a, b);
    }

    #[test]
    fn matches_direct_dft() {
        let m = 4;
        let fft = Fft3::new(m);
        let u = sample(m);
        let mut s = fft.zeroed_spectrum();
        fft.forward(&u, &mut s);
        let h = fft.half();
        let tau = 2.0 * std::f64::consts::PI / m as f64;
        for kz in 0..m {
            for ky in 0..m {
                for kx in 0..h {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for z in 0..m {
                        for y in 0..m {
                            for x in 0..m {
                                let ph = -tau * (kx * x + ky * y + kz * z) as f64;
                                acc += u[x + m * (y + m * z)] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    assert!((acc - s[kx + h * (ky + m * kz)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn embedded_equals_explicit_padding() {
        let n = 4;
        let m = 2 * n;
        let fft = Fft3::new(m);
        let u = sample(n);
        let mut padded = vec![0.0; m * m * m];
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    padded[x + m * (y + m * z)] = u[x + n * (y + n * z)];
                }
            }
        }
        let (mut a, mut b) = (fft.zeroed_spectrum(), fft.zeroed_spectrum());
        fft.forward(&padded, &mut a);
        fft.forward_embedded(&u, &mut b);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-13);
        }
        let mut full = vec![0.0; m * m * m];
        fft.inverse(&mut a, &mut full);
        let mut corner = vec![0.0; n * n * n];
        fft.inverse_embedded(&mut b, &mut corner);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let v = corner[x + n * (y + n * z)];
                    assert!((v - full[x + m * (y + m * z)]).abs() < 1e-13);
                    assert!((v - u[x + n * (y + n * z)]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 8), 0);
        assert_eq!(signed_index(4, 8), 4);
        assert_eq!(signed_index(5, 8), -3);
    }
}
