//! Heat kernel of ℝ³, its derivatives, and the Coulomb potential and field
//! it generates.
//!
//! The field operator is `∇(-Δ)^{-1}`, i.e. multiplication by `iξ/|ξ|²` in
//! Fourier space. For a positive charge it points toward the charge; the
//! closed forms below carry that sign.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureSpec, TailHint};

/// Highest total derivative order supported by [`heat_kernel_derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: [f64; 3],
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: [f64; 3]) -> Self {
        Self { t, x }
    }

    /// Point on the first axis at distance `r`.
    pub fn radial(t: f64, r: f64) -> Self {
        Self { t, x: [r, 0.0, 0.0] }
    }

    pub fn r2(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }

    pub fn r(&self) -> f64 {
        self.r2().sqrt()
    }

    fn check(&self) -> Result<()> {
        if self.t > 0.0 && self.t.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveTime(self.t))
        }
    }
}

/// Multi-index `(α₁, α₂, α₃)` for `∇^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DerivativeIndex(pub [u32; 3]);

impl DerivativeIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn partial(j: usize) -> Self {
        let mut a = [0; 3];
        a[j] = 1;
        Self(a)
    }
}

/// Which printed constant a field or profile evaluation uses.
///
/// `Paper` uses the prefactors as printed with the expansion formulas;
/// `Oracle` uses the constants fixed by the closed-form Gauss-law field. Both are always available so that discrepancies are reported
/// rather than absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefactorMode {
    Paper,
    #[default]
    Oracle,
}

impl PrefactorMode {
    /// Prefactor in front of `∫₀^∞ ∇G(t+σ) dσ`.
    pub fn field_prefactor(self) -> f64 {
        match self {
            PrefactorMode::Paper => 2.0 * PI.sqrt() / PI,
            PrefactorMode::Oracle => 1.0,
        }
    }
}

impl std::str::FromStr for PrefactorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(PrefactorMode::Paper),
            "oracle" => Ok(PrefactorMode::Oracle),
            other => Err(Error::Config(format!(
                "unknown prefactor mode '{other}' (expected paper or oracle)"
            ))),
        }
    }
}

impl std::fmt::Display for PrefactorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PrefactorMode::Paper => "paper",
            PrefactorMode::Oracle => "oracle",
        })
    }
}

/// `G(t, x) = (4πt)^{-3/2} exp(-|x|²/(4t))`.
pub fn heat_kernel(p: SpaceTimePoint) -> Result<f64> {
    p.check()?;
    Ok(gaussian(p.t, p.r2()))
}

#[inline]
pub(crate) fn gaussian(t: f64, r2: f64) -> f64 {
    (4.0 * PI * t).powf(-1.5) * (-r2 / (4.0 * t)).exp()
}

/// Physicists' Hermite polynomial `H_k(z)`.
fn hermite(k: u32, z: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * z);
    if k == 0 {
        return h0;
    }
    for n in 1..k {
        let h2 = 2.0 * z * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `∇^α G(t, x)`, exact: per axis `∂^k g = (-1)^k (4t)^{-k/2} H_k(x/(2√t)) g`.
pub fn heat_kernel_derivative(p: SpaceTimePoint, d: DerivativeIndex) -> Result<f64> {
    p.check()?;
    if d.order() > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder(d.order()));
    }
    let scale = 1.0 / (2.0 * p.t.sqrt());
    let mut factor = 1.0;
    for (k, xi) in d.0.iter().zip(p.x) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        factor *= sign * scale.powi(*k as i32) * hermite(*k, xi * scale);
    }
    Ok(factor * gaussian(p.t, p.r2()))
}

/// `∇G(t, x) = -x G / (2t)`.
pub fn heat_kernel_gradient(p: SpaceTimePoint) -> Result<[f64; 3]> {
    p.check()?;
    let c = -gaussian(p.t, p.r2()) / (2.0 * p.t);
    Ok(p.x.map(|xi| c * xi))
}

/// `ΔG(t, x) = G (|x|²/(4t²) - 3/(2t))`, which is also `∂_t G`.
pub fn heat_kernel_laplacian(p: SpaceTimePoint) -> Result<f64> {
    p.check()?;
    Ok(laplacian_radial(p.t, p.r2()))
}

#[inline]
pub(crate) fn laplacian_radial(t: f64, r2: f64) -> f64 {
    gaussian(t, r2) * (r2 / (4.0 * t * t) - 1.5 / t)
}

/// Below this `z = r/(2√t)` the erf-based closed forms switch to series.
const SERIES_SWITCH: f64 = 0.5;

/// `(erf(z) - 2z e^{-z²}/√π) / z³` by its Taylor series; for small `z`.
fn enclosed_mass_over_z3_series(z: f64) -> f64 {
    // Σ_{n≥1} (-1)^{n+1} 2n z^{2n-2} / (n! (2n+1)), times 2/√π.
    let z2 = z * z;
    let mut sum = 0.0;
    let mut pow = 1.0;
    let mut fact = 1.0;
    for n in 1..=30u32 {
        let nf = n as f64;
        fact *= nf;
        let term = 2.0 * nf * pow / (fact * (2.0 * nf + 1.0));
        if n % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-18 * sum.abs() {
            break;
        }
        pow *= z2;
    }
    sum * 2.0 / PI.sqrt()
}

/// Mass of `G(t, ·)` inside the ball of radius `r`:
/// `erf(r/(2√t)) - (r/√(πt)) e^{-r²/(4t)}`.
pub fn enclosed_gaussian_mass(r: f64, t: f64) -> f64 {
    let z = r / (2.0 * t.sqrt());
    if z < SERIES_SWITCH {
        enclosed_mass_over_z3_series(z) * z * z * z
    } else {
        libm::erf(z) - 2.0 * z / PI.sqrt() * (-z * z).exp()
    }
}

/// `ψ = (-Δ)^{-1} G(t)`: `erf(r/(2√t)) / (4πr)`, continuous at `r = 0`.
pub fn coulomb_potential_of_gaussian(p: SpaceTimePoint) -> Result<f64> {
    p.check()?;
    let r = p.r();
    let sqrt_t = p.t.sqrt();
    let z = r / (2.0 * sqrt_t);
    if z < 1e-4 {
        // erf(z)/z = (2/√π)(1 - z²/3 + z⁴/10 - z⁶/42)
        let z2 = z * z;
        let erf_over_z = 2.0 / PI.sqrt() * (1.0 - z2 / 3.0 + z2 * z2 / 10.0 - z2 * z2 * z2 / 42.0);
        Ok(erf_over_z / (4.0 * PI * 2.0 * sqrt_t))
    } else {
        Ok(libm::erf(z) / (4.0 * PI * r))
    }
}

/// Field of a radial charge with `mass` enclosed by the sphere through `x`:
/// `-x mass / (4π|x|³)`; zero at the origin.
pub fn gauss_law_field(x: [f64; 3], enclosed_mass: f64) -> [f64; 3] {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return [0.0; 3];
    }
    let c = -enclosed_mass / (4.0 * PI * r2 * r2.sqrt());
    x.map(|xi| c * xi)
}

/// `∇(-Δ)^{-1} G(t, x)` in closed form.
pub fn field_of_gaussian_closed(p: SpaceTimePoint) -> Result<[f64; 3]> {
    p.check()?;
    let r = p.r();
    let z = r / (2.0 * p.t.sqrt());
    if z < SERIES_SWITCH {
        // m/r³ = series(z)·z³/r³ = series(z) / (8 t^{3/2})
        let c = -enclosed_mass_over_z3_series(z) / (8.0 * p.t.powf(1.5)) / (4.0 * PI);
        Ok(p.x.map(|xi| c * xi))
    } else {
        Ok(gauss_law_field(p.x, enclosed_gaussian_mass(r, p.t)))
    }
}

/// `c ∫₀^∞ ∇G(t+σ, x) dσ` by semi-infinite quadrature, with `c` chosen by
/// `mode` (see [`PrefactorMode::field_prefactor`]).
pub fn field_of_gaussian_sigma(
    p: SpaceTimePoint,
    q: &QuadratureSpec,
    mode: PrefactorMode,
) -> Result<[f64; 3]> {
    p.check()?;
    let r2 = p.r2();
    if r2 == 0.0 {
        return Ok([0.0; 3]);
    }
    // ∇G(t+σ) = -x G(t+σ) / (2(t+σ)) decays like σ^{-5/2}.
    let spec = q.with_tail(TailHint::Algebraic(2.5));
    let t = p.t;
    let res = quadrature::integrate_semi_infinite(
        |sigma| gaussian(t + sigma, r2) / (2.0 * (t + sigma)),
        0.0,
        &spec,
    )?;
    let c = -mode.field_prefactor() * res.value;
    Ok(p.x.map(|xi| c * xi))
}

/// `G(t, x) ∇(-Δ)^{-1} G(t, x)` from the closed forms.
pub fn gfg_product_direct(p: SpaceTimePoint) -> Result<[f64; 3]> {
    let g = heat_kernel(p)?;
    Ok(field_of_gaussian_closed(p)?.map(|e| g * e))
}

/// The same product from its σ-representation
/// `(4π)^{-3/2} t^{-1/2} ∫₀^∞ (2+σ)^{-5/2} ∇G(t(1+σ)/(2+σ), x) dσ`.
pub fn gfg_product_sigma(p: SpaceTimePoint, q: &QuadratureSpec) -> Result<[f64; 3]> {
    p.check()?;
    let r2 = p.r2();
    if r2 == 0.0 {
        return Ok([0.0; 3]);
    }
    let spec = q.with_tail(TailHint::Algebraic(2.5));
    let t = p.t;
    let res = quadrature::integrate_semi_infinite(
        |sigma| {
            let tau = t * (1.0 + sigma) / (2.0 + sigma);
            (2.0 + sigma).powf(-2.5) * gaussian(tau, r2) / (2.0 * tau)
        },
        0.0,
        &spec,
    )?;
    let c = -(4.0 * PI).powf(-1.5) / t.sqrt() * res.value;
    Ok(p.x.map(|xi| c * xi))
}

/// Charge inside radius `r` of a radial density: `4π ∫₀^r ρ(s) s² ds`.
pub fn enclosed_mass<F: Fn(f64) -> f64>(rho: F, r: f64, q: &QuadratureSpec) -> Result<f64> {
    if r <= 0.0 {
        return Ok(0.0);
    }
    let res = quadrature::integrate_finite(|s| rho(s) * s * s, 0.0, r, q)?;
    Ok(4.0 * PI * res.value)
}

/// Gauss-law field `∇(-Δ)^{-1}ρ` of a radial density at `x`.
pub fn field_of_radial_density<F: Fn(f64) -> f64>(
    rho: F,
    x: [f64; 3],
    q: &QuadratureSpec,
) -> Result<[f64; 3]> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Ok([0.0; 3]);
    }
    Ok(gauss_law_field(x, enclosed_mass(rho, r, q)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_PI_M32: f64 = 0.022_448_390_265_645_82;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn heat_kernel_values() {
        let g0 = heat_kernel(SpaceTimePoint::new(1.0, [0.0; 3])).unwrap();
        assert!(rel(g0, FOUR_PI_M32) < 1e-14);
        assert!((g0 - 2.24483903e-2).abs() < 1e-10);
        let mut last = g0;
        for k in 1..40 {
            let g = heat_kernel(SpaceTimePoint::radial(1.0, k as f64)).unwrap();
            assert!(g < last && g >= 0.0);
            last = g;
        }
        assert!(last < 1e-150);
    }

    #[test]
    fn non_positive_time_is_a_domain_error() {
        for t in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                heat_kernel(SpaceTimePoint::new(t, [0.0; 3])),
                Err(Error::NonPositiveTime(_))
            ));
        }
    }

    #[test]
    fn gradient_and_laplacian_at_origin() {
        let p = SpaceTimePoint::new(1.0, [0.0; 3]);
        assert_eq!(heat_kernel_gradient(p).unwrap(), [0.0; 3]);
        for j in 0..3 {
            assert_eq!(heat_kernel_derivative(p, DerivativeIndex::partial(j)).unwrap(), 0.0);
        }
        let lap = heat_kernel_laplacian(p).unwrap();
        assert!(rel(lap, -1.5 * FOUR_PI_M32) < 1e-14);
        assert!((lap + 3.36726e-2).abs() < 1e-6);
    }

    #[test]
    fn laplacian_is_trace_of_hessian() {
        let p = SpaceTimePoint::new(0.7, [0.3, -0.7, 1.1]);
        let trace: f64 = (0..3)
            .map(|j| {
                let mut a = [0; 3];
                a[j] = 2;
                heat_kernel_derivative(p, DerivativeIndex(a)).unwrap()
            })
            .sum();
        assert!(rel(trace, heat_kernel_laplacian(p).unwrap()) < 1e-13);
    }

    #[test]
    fn unsupported_order() {
        let p = SpaceTimePoint::new(1.0, [0.0; 3]);
        assert!(matches!(
            heat_kernel_derivative(p, DerivativeIndex([2, 2, 1])),
            Err(Error::UnsupportedOrder(5))
        ));
    }

    #[test]
    fn coulomb_limits() {
        let far = coulomb_potential_of_gaussian(SpaceTimePoint::radial(1.0, 50.0)).unwrap();
        assert!(rel(far, 1.0 / (4.0 * PI * 50.0)) < 1e-8);
        let near = coulomb_potential_of_gaussian(SpaceTimePoint::radial(1e-8, 1.0)).unwrap();
        assert!(rel(near, 1.0 / (4.0 * PI)) < 1e-12);
        // continuity across the series switch and at the origin
        let at0 = coulomb_potential_of_gaussian(SpaceTimePoint::radial(1.0, 0.0)).unwrap();
        assert!(rel(at0, 1.0 / (4.0 * PI * PI.sqrt())) < 1e-14);
        let a = coulomb_potential_of_gaussian(SpaceTimePoint::radial(1.0, 2e-4 * 0.999)).unwrap();
        let b = coulomb_potential_of_gaussian(SpaceTimePoint::radial(1.0, 2e-4 * 1.001)).unwrap();
        assert!(rel(a, b) < 1e-8);
    }

    #[test]
    fn closed_field_values() {
        assert_eq!(field_of_gaussian_closed(SpaceTimePoint::new(1.0, [0.0; 3])).unwrap(), [0.0; 3]);
        let e = field_of_gaussian_closed(SpaceTimePoint::radial(1.0, 2.0)).unwrap();
        let m = libm::erf(1.0) - 2.0 / PI.sqrt() * (-1.0f64).exp();
        assert!((m - 0.4275933).abs() < 1e-7);
        assert!(rel(-e[0], m / (16.0 * PI)) < 1e-14);
        assert!((e[0].abs() - 8.50670e-3).abs() < 1e-8);
        assert!(e[0] < 0.0, "field of a positive charge points to the charge");
        let far = field_of_gaussian_closed(SpaceTimePoint::radial(1.0, 50.0)).unwrap();
        assert!(rel(far[0].abs(), 1.0 / (4.0 * PI * 2500.0)) < 1e-8);
    }

    #[test]
    fn enclosed_mass_series_matches_closed_form_at_switch() {
        let t = 1.0;
        let r = 2.0 * SERIES_SWITCH;
        let z = SERIES_SWITCH;
        let series = enclosed_mass_over_z3_series(z) * z * z * z;
        let closed = libm::erf(z) - 2.0 * z / PI.sqrt() * (-z * z).exp();
        assert!(rel(series, closed) < 1e-13);
        assert!(rel(enclosed_gaussian_mass(r, t), closed) < 1e-13);
    }

    #[test]
    fn sigma_field_modes() {
        let q = QuadratureSpec::new(1e-15, 1e-13);
        let p = SpaceTimePoint::new(1.0, [0.0; 3]);
        for mode in [PrefactorMode::Paper, PrefactorMode::Oracle] {
            assert_eq!(field_of_gaussian_sigma(p, &q, mode).unwrap(), [0.0; 3]);
        }
        let p = SpaceTimePoint::radial(1.0, 2.0);
        let oracle = field_of_gaussian_sigma(p, &q, PrefactorMode::Oracle).unwrap();
        assert!((oracle[0].abs() - 8.50670e-3).abs() < 1e-8);
        let paper = field_of_gaussian_sigma(p, &q, PrefactorMode::Paper).unwrap();
        assert!(rel(paper[0] / oracle[0], 1.1283792) < 1e-7);
    }

    #[test]
    fn radial_density_fields() {
        let q = QuadratureSpec::new(1e-15, 1e-13);
        let x = [0.4, -1.2, 0.9];
        let e = field_of_radial_density(|r| gaussian(1.0, r * r), x, &q).unwrap();
        let c = field_of_gaussian_closed(SpaceTimePoint::new(1.0, x)).unwrap();
        for j in 0..3 {
            assert!(rel(e[j], c[j]) < 1e-9);
        }
        assert_eq!(field_of_radial_density(|_| 0.0, x, &q).unwrap(), [0.0; 3]);
        // uniform unit ball of total charge 1, seen from r = 2
        let ball = |r: f64| if r <= 1.0 { 3.0 / (4.0 * PI) } else { 0.0 };
        let q_ball = QuadratureSpec::new(1e-12, 0.0);
        let e = field_of_radial_density(ball, [2.0, 0.0, 0.0], &q_ball).unwrap();
        assert!(rel(e[0].abs(), 1.0 / (16.0 * PI)) < 1e-10);
        assert!((e[0].abs() - 1.98944e-2).abs() < 1e-7);
    }

    /// Fourth-order central difference of `f` along axis `j`.
    fn central_diff(f: impl Fn([f64; 3]) -> f64, x: [f64; 3], j: usize, h: f64) -> f64 {
        let at = |d: f64| {
            let mut y = x;
            y[j] += d;
            f(y)
        };
        (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // Deterministic pseudo-random points; each order-k derivative is
        // differenced from the order-(k-1) one, starting from G itself.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut points = vec![SpaceTimePoint::new(1.0, [0.3, -0.7, 1.1])];
        for _ in 0..19 {
            let t = 0.5 + 1.5 * next();
            points.push(SpaceTimePoint::new(t, [0.0; 3].map(|_| 4.0 * next() - 2.0)));
        }
        let mut indices = Vec::new();
        for a in 0..=4u32 {
            for b in 0..=4 - a {
                for c in 0..=4 - a - b {
                    if a + b + c > 0 {
                        indices.push([a, b, c]);
                    }
                }
            }
        }
        for p in &points {
            for alpha in &indices {
                let j = alpha.iter().position(|&k| k > 0).unwrap();
                let mut lower = *alpha;
                lower[j] -= 1;
                let f = |x: [f64; 3]| {
                    heat_kernel_derivative(SpaceTimePoint::new(p.t, x), DerivativeIndex(lower))
                        .unwrap()
                };
                let fd = central_diff(f, p.x, j, 1e-3);
                let exact = heat_kernel_derivative(*p, DerivativeIndex(*alpha)).unwrap();
                let order = alpha.iter().sum::<u32>() as i32;
                let scale = gaussian(p.t, 0.0) * p.t.powf(-0.5 * order as f64);
                assert!(
                    (fd - exact).abs() < 1e-6 * exact.abs().max(scale),
                    "alpha {alpha:?} at {p:?}: fd {fd} exact {exact}"
                );
            }
        }
    }

    #[test]
    fn potential_solves_poisson_by_finite_differences() {
        let p = SpaceTimePoint::radial(1.0, 1.0);
        let psi = |x: [f64; 3]| coulomb_potential_of_gaussian(SpaceTimePoint::new(1.0, x)).unwrap();
        let h = 1e-2;
        let mut lap = -6.0 * psi(p.x);
        for j in 0..3 {
            for d in [-h, h] {
                let mut y = p.x;
                y[j] += d;
                lap += psi(y);
            }
        }
        lap /= h * h;
        assert!((-lap - heat_kernel(p).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn product_integrates_to_zero() {
        // Component j is f(r)·x_j/r: radial part times the angular mean of ω_j.
        let q = QuadratureSpec::new(1e-13, 1e-12).with_tail(TailHint::Algebraic(4.0));
        let radial = quadrature::integrate_semi_infinite(
            |r| {
                let p = SpaceTimePoint::radial(1.0, r);
                heat_kernel(p).unwrap() * field_of_gaussian_closed(p).unwrap()[0] * r * r
            },
            0.0,
            &q,
        )
        .unwrap()
        .value;
        assert!(radial.abs() > 1e-6);
        let (mu, w) = quadrature::gauss_legendre(12);
        let angular: f64 = 2.0 * PI * mu.iter().zip(&w).map(|(m, w)| m * w).sum::<f64>();
        assert!((radial * angular).abs() < 1e-10);
    }

    proptest::proptest! {
        #[test]
        fn self_similar_scaling(
            t in 0.2f64..3.0,
            x0 in -2.0f64..2.0,
            x1 in -2.0f64..2.0,
            x2 in -2.0f64..2.0,
            lam_idx in 0usize..4,
        ) {
            let lam = [0.5, 0.8, 1.7, 2.0][lam_idx];
            let p = SpaceTimePoint::new(t, [x0, x1, x2]);
            let s = SpaceTimePoint::new(lam * lam * t, [x0, x1, x2].map(|v| lam * v));
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * b.abs().max(1e-3);
            proptest::prop_assert!(close(lam.powi(3) * heat_kernel(s).unwrap(), heat_kernel(p).unwrap()));
            let (gs, gp) = (heat_kernel_gradient(s).unwrap(), heat_kernel_gradient(p).unwrap());
            let (fs, fp) = (gfg_product_direct(s).unwrap(), gfg_product_direct(p).unwrap());
            for j in 0..3 {
                proptest::prop_assert!(close(lam.powi(4) * gs[j], gp[j]));
                proptest::prop_assert!(close(lam.powi(5) * fs[j], fp[j]));
            }
            proptest::prop_assert!(close(
                lam.powi(5) * heat_kernel_laplacian(s).unwrap(),
                heat_kernel_laplacian(p).unwrap()
            ));
        }
    }
}
