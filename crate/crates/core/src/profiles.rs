//! Terms of the large-time expansion
//!
//! ```text
//! u(t) ≈ M₀G(t) + M₁·∇G(t) + U₁ʳᵃᵈ(t) + K₂(t) log t
//! ```
//!
//! and the constants behind them.
//!
//! Everything rests on two facts about Gaussians. The product identity
//!
//! ```text
//! (G ∇(-Δ)^{-1}G)(τ) = (4π)^{-3/2} τ^{-1/2} ∫₀^∞ (2+σ)^{-5/2} ∇G(τ(1+σ)/(2+σ)) dσ
//! ```
//!
//! and the semigroup collapse `∂ⱼG(a) ∗ ∂ⱼG(b) = ∂ⱼ²G(a+b)`, so that
//! `∇G(a) ∗· ∇G(b) = ΔG(a+b)`. Together they turn every Duhamel integral of
//! the form `∫₀^t ∇G(t-s) ∗ (G∇(-Δ)^{-1}G)(τ(s)) ds` into a double integral
//! of `ΔG` with no spatial convolution left:
//!
//! ```text
//! (4π)^{-3/2} ∫₀^t ∫₀^∞ τ(s)^{-1/2} (2+σ)^{-5/2} ΔG(t - s + τ(s)(1+σ)/(2+σ)) dσ ds
//! ```
//!
//! `τ(s) = s` gives `U₁ʳᵃᵈ`, `τ(s) = 1+s` gives `J`, and `τ(s) = t₀+s`
//! gives the exact second-order term for Gaussian initial data.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{
    self, gaussian, laplacian_radial, PrefactorMode, SpaceTimePoint,
};
use crate::quadrature::{self, QuadratureSpec, SingularityHint, TailHint};

/// `M₀ = ∫u₀` and `M₁ = -∫x u₀`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Moments {
    pub m0: f64,
    pub m1: [f64; 3],
}

impl Moments {
    pub fn new(m0: f64, m1: [f64; 3]) -> Self {
        Self { m0, m1 }
    }

    pub fn radial(m0: f64) -> Self {
        Self { m0, m1: [0.0; 3] }
    }
}

/// Which terms an approximant includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ExpansionSpec {
    pub include_u0: bool,
    pub include_u1odd: bool,
    pub include_u1rad: bool,
    pub include_k2log: bool,
    pub prefactor_mode: PrefactorMode,
}

impl ExpansionSpec {
    pub fn u0_only() -> Self {
        Self {
            include_u0: true,
            include_u1odd: false,
            include_u1rad: false,
            include_k2log: false,
            prefactor_mode: PrefactorMode::Oracle,
        }
    }

    /// `U₀ + U₁ᵒᵈᵈ + U₁ʳᵃᵈ`.
    pub fn first_order() -> Self {
        Self { include_u1odd: true, include_u1rad: true, ..Self::u0_only() }
    }

    /// All four terms.
    pub fn full() -> Self {
        Self { include_k2log: true, ..Self::first_order() }
    }

    pub fn with_mode(mut self, mode: PrefactorMode) -> Self {
        self.prefactor_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.include_k2log && !self.include_u1rad {
            return Err(Error::Config(
                "the K2 log term requires the U1rad term in the same expansion".into(),
            ));
        }
        Ok(())
    }

    /// Short label such as `u0+u1odd+u1rad`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (on, name) in [
            (self.include_u0, "u0"),
            (self.include_u1odd, "u1odd"),
            (self.include_u1rad, "u1rad"),
            (self.include_k2log, "k2log"),
        ] {
            if on {
                parts.push(name);
            }
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

/// `(2π - 3√3)/6`, the value of [`dimensionless_log_integral`].
pub fn log_integral_closed() -> f64 {
    (2.0 * PI - 3.0 * 3f64.sqrt()) / 6.0
}

/// `κ = (2π - 3√3)/(2⁷·3²·π³)`, so that `K₂ = -κ M₀³ ΔG`.
pub fn kappa() -> f64 {
    (2.0 * PI - 3.0 * 3f64.sqrt()) / (128.0 * 9.0 * PI.powi(3))
}

/// `(2π - 3√3)/(2⁷·3·π³)`, the moment coefficient for `M₀ = 1`.
pub fn moment_coefficient_closed() -> f64 {
    (2.0 * PI - 3.0 * 3f64.sqrt()) / (128.0 * 3.0 * PI.powi(3))
}

/// Constant in front of the `U₁ʳᵃᵈ` double integral, per unit `M₀²`:
/// `1/(8π²)` as printed, `(4π)^{-3/2}` from the product identity.
pub fn u1rad_prefactor(mode: PrefactorMode) -> f64 {
    match mode {
        PrefactorMode::Paper => 1.0 / (8.0 * PI * PI),
        PrefactorMode::Oracle => (4.0 * PI).powf(-1.5),
    }
}

/// `U₀ = M₀ G(t)`.
pub fn eval_u0(m: &Moments, p: SpaceTimePoint) -> Result<f64> {
    Ok(m.m0 * kernel::heat_kernel(p)?)
}

/// `U₁ᵒᵈᵈ = M₁·∇G(t)`.
pub fn eval_u1odd(m: &Moments, p: SpaceTimePoint) -> Result<f64> {
    let g = kernel::heat_kernel_gradient(p)?;
    Ok((0..3).map(|j| m.m1[j] * g[j]).sum())
}

/// Quadrature settings for the collapsed Duhamel integrals: the σ-tail is
/// `(2+σ)^{-5/2}`.
fn sigma_spec(q: &QuadratureSpec) -> QuadratureSpec {
    q.with_singularity(SingularityHint::None).with_tail(TailHint::Algebraic(2.5))
}

/// `U₁ʳᵃᵈ(t, x) = c M₀² ∫₀^t ∫₀^∞ s^{-1/2} (2+σ)^{-5/2} ΔG(t - s/(2+σ), x) dσ ds`
/// with `c` from [`u1rad_prefactor`]. The time argument stays in
/// `[t/2, t]`.
pub fn eval_u1rad(m: &Moments, p: SpaceTimePoint, q: &QuadratureSpec, mode: PrefactorMode) -> Result<f64> {
    if p.t <= 0.0 || !p.t.is_finite() {
        return Err(Error::NonPositiveTime(p.t));
    }
    if m.m0 == 0.0 {
        return Ok(0.0);
    }
    let (t, r2) = (p.t, p.r2());
    let res = quadrature::integrate_2d(
        |s, sigma| {
            (2.0 + sigma).powf(-2.5) * laplacian_radial(t - s / (2.0 + sigma), r2) / s.sqrt()
        },
        (0.0, t),
        &q.with_singularity(SingularityHint::InverseSqrtLeft),
        &sigma_spec(q),
    )?;
    Ok(m.m0 * m.m0 * u1rad_prefactor(mode) * res.value)
}

/// `(4π)^{-3/2} ∫₀^t ∫₀^∞ (t₀+s)^{-1/2} (2+σ)^{-5/2} ΔG(t-s+(t₀+s)(1+σ)/(2+σ), x) dσ ds`.
fn collapsed_duhamel(t0: f64, p: SpaceTimePoint, q: &QuadratureSpec) -> Result<f64> {
    if p.t <= 0.0 || !p.t.is_finite() {
        return Err(Error::NonPositiveTime(p.t));
    }
    let (t, r2) = (p.t, p.r2());
    let res = quadrature::integrate_2d(
        |s, sigma| {
            let tau = t0 + s;
            tau.powf(-0.5)
                * (2.0 + sigma).powf(-2.5)
                * laplacian_radial(t - s + tau * (1.0 + sigma) / (2.0 + sigma), r2)
        },
        (0.0, t),
        &q.with_singularity(SingularityHint::None),
        &sigma_spec(q),
    )?;
    Ok((4.0 * PI).powf(-1.5) * res.value)
}

/// `J(t) = ∫₀^t ∇G(t-s) ∗ (G∇(-Δ)^{-1}G)(1+s) ds`, collapsed as in the
/// module docs with `τ(s) = 1 + s`.
pub fn eval_j(p: SpaceTimePoint, q: &QuadratureSpec) -> Result<f64> {
    collapsed_duhamel(1.0, p, q)
}

/// Second-order Duhamel term for `u₀ = m₀ G(t₀)`: the solution is
/// `m₀ G(t₀+t) + q₂(t) + O(m₀³)`, where `q₂` collapses with `τ(s) = t₀+s`.
pub fn duhamel_quadratic_gaussian(m0: f64, t0: f64, p: SpaceTimePoint, q: &QuadratureSpec) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::NonPositiveTime(t0));
    }
    if m0 == 0.0 {
        return Ok(0.0);
    }
    Ok(m0 * m0 * collapsed_duhamel(t0, p, q)?)
}

/// `K₂(t, x) = -κ M₀³ ΔG(t, x)`, without the logarithm.
pub fn eval_k2(m: &Moments, p: SpaceTimePoint) -> Result<f64> {
    Ok(-kappa() * m.m0.powi(3) * kernel::heat_kernel_laplacian(p)?)
}

/// `K₂(t, x) log t`. This is added to the expansion:
/// `u ≈ U₀ + U₁ᵒᵈᵈ + U₁ʳᵃᵈ + K₂ log t`.
pub fn eval_k2_log_term(m: &Moments, p: SpaceTimePoint) -> Result<f64> {
    Ok(eval_k2(m, p)? * p.t.ln())
}

/// `∫₀¹ ∫₀^∞ s^{-1/2} (2+σ)^{-1} (4+2σ-s)^{-3/2} dσ ds`.
pub fn dimensionless_log_integral(q: &QuadratureSpec) -> Result<f64> {
    let res = quadrature::integrate_2d(
        |s, sigma| 1.0 / (s.sqrt() * (2.0 + sigma) * (4.0 + 2.0 * sigma - s).powf(1.5)),
        (0.0, 1.0),
        &q.with_singularity(SingularityHint::InverseSqrtLeft),
        &sigma_spec(q),
    )?;
    Ok(res.value)
}

/// The same integral with the σ-integral done in closed form. With
/// `w₀ = √(4-s)` and `x = √s/w₀`,
///
/// ```text
/// ∫₀^∞ (2+σ)^{-1} (4+2σ-s)^{-3/2} dσ = (2/s) (1/w₀ - atan(x)/√s)
///                                    = (2/w₀³) Σₖ (-1)ᵏ x^{2k} / (2k+3)
/// ```
///
/// and the series is used for small `x` where the first form cancels.
pub fn dimensionless_log_integral_reduced(q: &QuadratureSpec) -> Result<f64> {
    let inner = |s: f64| {
        let w0 = (4.0 - s).sqrt();
        let x2 = s / (4.0 - s);
        if x2 < 0.05 {
            let (mut term, mut sum) = (1.0, 0.0);
            for k in 0..24 {
                sum += term / (2 * k + 3) as f64;
                term *= -x2;
            }
            2.0 * sum / w0.powi(3)
        } else {
            2.0 / s * (1.0 / w0 - x2.sqrt().atan() / s.sqrt())
        }
    };
    let res = quadrature::integrate_finite(
        |s| inner(s) / s.sqrt(),
        0.0,
        1.0,
        &q.with_singularity(SingularityHint::InverseSqrtLeft),
    )?;
    Ok(res.value)
}

/// Radius beyond which the time-1 profiles are below `e^{-49}` of their
/// peak.
const MOMENT_RADIUS: f64 = 14.0;
const MOMENT_PANEL: f64 = 0.25;
const MOMENT_NODES: usize = 8;

/// `∫ y·(U₀∇(-Δ)^{-1}U₁ʳᵃᵈ + U₁ʳᵃᵈ∇(-Δ)^{-1}U₀)(1, y) dy`.
///
/// Both densities are radial, so their fields are Gauss-law fields
/// `-(y/r) m(r)/(4πr²)` with `m` the enclosed charge, and `y·E = -m/(4πr)`.
/// The integral becomes `-∫₀^∞ r (U₀ m_{U₁} + U₁ m_{U₀}) dr`, evaluated with
/// composite Gauss–Legendre panels; enclosed charges are accumulated panel
/// by panel with a Gauss–Legendre rule on each partial panel.
pub fn moment_coefficient(m: &Moments, q: &QuadratureSpec, mode: PrefactorMode) -> Result<f64> {
    if m.m0 == 0.0 {
        return Ok(0.0);
    }
    let u0 = |r: f64| m.m0 * gaussian(1.0, r * r);
    let u1 = |r: f64| eval_u1rad(m, SpaceTimePoint::radial(1.0, r), q, mode);
    let (gx, gw) = quadrature::gauss_legendre(MOMENT_NODES);
    let panels = (MOMENT_RADIUS / MOMENT_PANEL).round() as usize;
    let (mut mass0, mut mass1) = (0.0, 0.0);
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * MOMENT_PANEL;
        let b = a + MOMENT_PANEL;
        for (xi, wi) in gx.iter().zip(&gw) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            // enclosed charges at r: panel start plus the partial panel [a, r]
            let (mut p0, mut p1) = (0.0, 0.0);
            for (yj, wj) in gx.iter().zip(&gw) {
                let s = 0.5 * (a + r) + 0.5 * (r - a) * yj;
                let w = 0.5 * (r - a) * wj * 4.0 * PI * s * s;
                p0 += w * u0(s);
                p1 += w * u1(s)?;
            }
            let (e0, e1) = (mass0 + p0, mass1 + p1);
            total += 0.5 * (b - a) * wi * r * (u0(r) * e1 + u1(r)? * e0);
        }
        for (xi, wi) in gx.iter().zip(&gw) {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let w = 0.5 * (b - a) * wi * 4.0 * PI * s * s;
            mass0 += w * u0(s);
            mass1 += w * u1(s)?;
        }
    }
    Ok(-total)
}

/// Values of the individual terms at one point, for logging.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct TermValues {
    pub u0: f64,
    pub u1odd: f64,
    pub u1rad: f64,
    pub k2log: f64,
}

impl TermValues {
    pub fn sum(&self) -> f64 {
        self.u0 + self.u1odd + self.u1rad + self.k2log
    }
}

/// The selected terms at `p`; unselected ones are zero.
pub fn eval_terms(spec: &ExpansionSpec, m: &Moments, p: SpaceTimePoint, q: &QuadratureSpec) -> Result<TermValues> {
    spec.validate()?;
    let mut v = TermValues::default();
    if spec.include_u0 {
        v.u0 = eval_u0(m, p)?;
    }
    if spec.include_u1odd {
        v.u1odd = eval_u1odd(m, p)?;
    }
    if spec.include_u1rad {
        v.u1rad = eval_u1rad(m, p, q, spec.prefactor_mode)?;
    }
    if spec.include_k2log {
        v.k2log = eval_k2_log_term(m, p)?;
    }
    Ok(v)
}

/// Sum of the selected terms.
pub fn eval_expansion(spec: &ExpansionSpec, m: &Moments, p: SpaceTimePoint, q: &QuadratureSpec) -> Result<f64> {
    Ok(eval_terms(spec, m, p, q)?.sum())
}

/// Default tolerance for profile evaluation.
pub fn default_profile_spec() -> QuadratureSpec {
    QuadratureSpec::new(1e-9, 1e-10)
}

#[cfg(test)]
mod tests;
