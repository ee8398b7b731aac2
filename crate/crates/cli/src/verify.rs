//! Invariant suites for the kernel, quadrature and profile modules.
//!
//! Every check compares an achieved number with a target under a stated
//! tolerance; a report is produced even when checks fail.

use std::f64::consts::PI;

use ddasym::analysis::{lq_norm_profile, LqExponent, Symmetry};
use ddasym::kernel::{self, DerivativeIndex};
use ddasym::profiles::{self, Moments};
use ddasym::quadrature::{self, TailHint};
use ddasym::{PrefactorMode, QuadratureSpec, SingularityHint, SpaceTimePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub target: f64,
    pub achieved: f64,
    /// Passing means `|achieved - target| <= tolerance`, or for bounds
    /// (`target` infinite) `achieved <= tolerance`.
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub config_hash: String,
    pub profile: Profile,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub profile: Profile,
    pub seed: u64,
    /// Multiplies the κ used by the profile suite. Anything but 1 must fail.
    pub kappa_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { profile: Profile::Fast, seed: 0, kappa_scale: 1.0 }
    }
}

struct Suite<'a> {
    name: &'static str,
    checks: &'a mut Vec<Check>,
}

impl Suite<'_> {
    fn close(&mut self, name: &str, target: f64, achieved: f64, tolerance: f64, detail: &str) {
        let passed = (achieved - target).abs() <= tolerance;
        self.push(name, target, achieved, tolerance, passed, detail);
    }

    /// `achieved` is an error measure that must stay below `bound`.
    fn below(&mut self, name: &str, achieved: f64, bound: f64, detail: &str) {
        let passed = achieved <= bound;
        self.push(name, 0.0, achieved, bound, passed, detail);
    }

    /// Records a computation that errored as a failed check.
    fn attempt(&mut self, name: &str, f: impl FnOnce(&mut Self) -> ddasym::Result<()>) {
        if let Err(e) = f(self) {
            self.push(name, f64::NAN, f64::NAN, 0.0, false, &e.to_string());
        }
    }

    fn push(&mut self, name: &str, target: f64, achieved: f64, tolerance: f64, passed: bool, detail: &str) {
        self.checks.push(Check {
            suite: self.name.into(),
            name: name.into(),
            target,
            achieved,
            tolerance,
            passed: passed && achieved.is_finite(),
            detail: detail.into(),
        });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn vec_rel(a: [f64; 3], b: [f64; 3]) -> f64 {
    let diff = (0..3).map(|j| (a[j] - b[j]).powi(2)).sum::<f64>().sqrt();
    diff / b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}

/// `n` points with `t` log-uniform in `[0.1, 10]` and `|x| ≲ 4√t`.
pub fn sample_points(seed: u64, n: usize) -> Vec<SpaceTimePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = 10f64.powf(rng.gen_range(-1.0..1.0));
            let s = 4.0 * t.sqrt();
            SpaceTimePoint::new(t, [rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s)])
        })
        .collect()
}

fn kernel_suite(s: &mut Suite, opts: &VerifyOptions, quad: &QuadratureSpec) {
    let points = sample_points(opts.seed, if opts.profile == Profile::Full { 50 } else { 20 });
    s.attempt("heat_kernel_unit_mass", |s| {
        let mut worst: f64 = 0.0;
        for t in [0.1, 1.0, 7.0] {
            let res = quadrature::integrate_semi_infinite(
                |r| 4.0 * PI * r * r * kernel::heat_kernel(SpaceTimePoint::radial(t, r)).unwrap_or(f64::NAN),
                0.0,
                quad,
            )?;
            worst = worst.max((res.value - 1.0).abs());
        }
        s.below("heat_kernel_unit_mass", worst, 1e-9, "max |∫G(t) - 1| over t in {0.1, 1, 7}");
        Ok(())
    });
    s.attempt("derivatives_vs_finite_differences", |s| {
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for p in &points {
            let g = kernel::heat_kernel_gradient(*p)?;
            for j in 0..3 {
                let mut xp = p.x;
                let mut xm = p.x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (kernel::heat_kernel(SpaceTimePoint::new(p.t, xp))?
                    - kernel::heat_kernel(SpaceTimePoint::new(p.t, xm))?)
                    / (2.0 * h);
                let scale = kernel::heat_kernel(SpaceTimePoint::new(p.t, [0.0; 3]))? / p.t.sqrt();
                worst = worst.max((fd - g[j]).abs() / scale);
            }
            let lap = kernel::heat_kernel_laplacian(*p)?;
            let sum: f64 = (0..3)
                .map(|j| {
                    let mut d = [0; 3];
                    d[j] = 2;
                    kernel::heat_kernel_derivative(*p, DerivativeIndex(d))
                })
                .sum::<ddasym::Result<f64>>()?;
            let scale = kernel::heat_kernel(SpaceTimePoint::new(p.t, [0.0; 3]))? / p.t;
            worst = worst.max((lap - sum).abs() / scale);
        }
        s.below("derivatives_vs_finite_differences", worst, 1e-6, "central differences, h = 1e-4, scaled by G(t,0)/√t");
        Ok(())
    });
    s.attempt("field_sigma_vs_closed", |s| {
        let (mut worst, mut ratio_dev): (f64, f64) = (0.0, 0.0);
        for p in &points {
            let closed = kernel::field_of_gaussian_closed(*p)?;
            let oracle = kernel::field_of_gaussian_sigma(*p, quad, PrefactorMode::Oracle)?;
            let paper = kernel::field_of_gaussian_sigma(*p, quad, PrefactorMode::Paper)?;
            worst = worst.max(vec_rel(oracle, closed));
            let j = (0..3).max_by(|&a, &b| oracle[a].abs().total_cmp(&oracle[b].abs())).unwrap_or(0);
            ratio_dev = ratio_dev.max((paper[j] / oracle[j] - 2.0 * PI.sqrt() / PI).abs());
        }
        s.below("field_sigma_vs_closed", worst, 1e-8, "oracle-mode sigma integral vs closed-form Gauss-law field");
        s.below("field_paper_over_oracle", ratio_dev, 1e-10, "ratio of the two modes minus 2√π/π");
        Ok(())
    });
    s.attempt("product_sigma_vs_direct", |s| {
        let mut worst: f64 = 0.0;
        for p in &points {
            worst = worst.max(vec_rel(kernel::gfg_product_sigma(*p, quad)?, kernel::gfg_product_direct(*p)?));
        }
        s.below("product_sigma_vs_direct", worst, 1e-8, "sigma representation of G∇(-Δ)⁻¹G vs closed forms");
        Ok(())
    });
    s.attempt("product_integrates_to_zero", |s| {
        // ∫ (G∇(-Δ)⁻¹G)_j over ℝ³ in spherical coordinates, angles by tensor Gauss–Legendre.
        let (mu, wmu) = quadrature::gauss_legendre(16);
        let (phi, wphi) = quadrature::gauss_legendre_on(16, 0.0, 2.0 * PI);
        let mut worst: f64 = 0.0;
        for j in 0..3 {
            let res = quadrature::integrate_semi_infinite(
                |r| {
                    let mut acc = 0.0;
                    for (m, wm) in mu.iter().zip(&wmu) {
                        let st = (1.0 - m * m).sqrt();
                        for (f, wf) in phi.iter().zip(&wphi) {
                            let x = [r * st * f.cos(), r * st * f.sin(), r * m];
                            let v = kernel::gfg_product_direct(SpaceTimePoint::new(1.0, x)).map(|v| v[j]).unwrap_or(f64::NAN);
                            acc += wm * wf * v;
                        }
                    }
                    r * r * acc
                },
                0.0,
                quad,
            )?;
            worst = worst.max(res.value.abs());
        }
        s.below("product_integrates_to_zero", worst, 1e-10, "max componentwise |∫ G∇(-Δ)⁻¹G dx| at t = 1");
        Ok(())
    });
    s.attempt("gauss_law_radial_density", |s| {
        let mut worst: f64 = 0.0;
        for p in points.iter().take(10) {
            let rho = |r: f64| kernel::heat_kernel(SpaceTimePoint::radial(p.t, r)).unwrap_or(f64::NAN);
            let e = kernel::field_of_radial_density(rho, p.x, &quad.tightened(10.0))?;
            worst = worst.max(vec_rel(e, kernel::field_of_gaussian_closed(*p)?));
        }
        s.below("gauss_law_radial_density", worst, 1e-8, "enclosed-mass field of G(t) vs closed form");
        Ok(())
    });
}

fn quadrature_suite(s: &mut Suite, quad: &QuadratureSpec) {
    s.attempt("quadrature_examples", |s| {
        let sq = quadrature::integrate_finite(|x| 1.0 / x.sqrt(), 0.0, 1.0, &quad.with_singularity(SingularityHint::InverseSqrtLeft))?;
        s.close("inverse_sqrt_endpoint", 2.0, sq.value, 1e-10, "∫₀¹ s^(-1/2) ds");
        let ex = quadrature::integrate_semi_infinite(|x| (-x).exp(), 0.0, quad)?;
        s.close("exponential_tail", 1.0, ex.value, 1e-10, "∫₀^∞ e^(-x) dx");
        let alg = quadrature::integrate_semi_infinite(|x| (1.0 + x).powf(-2.5), 0.0, &quad.with_tail(TailHint::Algebraic(2.5)))?;
        s.close("algebraic_tail", 2.0 / 3.0, alg.value, 1e-10, "∫₀^∞ (1+x)^(-5/2) dx");
        let lin = quadrature::integrate_finite(|x| 3.0 * x.sin() + 2.0 * x * x, 0.0, 2.0, quad)?;
        s.close("linearity", 3.0 * (1.0 - 2f64.cos()) + 16.0 / 3.0, lin.value, 1e-10, "∫₀² (3 sin x + 2x²) dx");
        let bound = quadrature::integrate_finite(|x| (10.0 * x).cos() * (-x).exp(), 0.0, 3.0, &QuadratureSpec::new(1e-6, 0.0))?;
        let exact = {
            // ∫₀³ e^{-x} cos 10x dx = Re[(1 - e^{-3(1-10i)})/(1-10i)]
            let (a, b) = (1.0f64, 10.0f64);
            let e = (-3.0 * a).exp();
            (a - e * (a * (3.0 * b).cos() - b * (3.0 * b).sin())) / (a * a + b * b)
        };
        s.below("error_estimate_covers_error", (bound.value - exact).abs() - bound.error_estimate.max(1e-6), 0.0, "actual error minus reported estimate");
        Ok(())
    });
    s.attempt("log_integral", |s| {
        let closed = profiles::log_integral_closed();
        let two_d = profiles::dimensionless_log_integral(quad)?;
        let reduced = profiles::dimensionless_log_integral_reduced(quad)?;
        s.close("log_integral_2d", closed, two_d, 1e-8, "iterated quadrature vs (2π-3√3)/6");
        s.close("log_integral_reduced", closed, reduced, 1e-8, "inner integral closed vs (2π-3√3)/6");
        s.close("log_integral_paths_agree", reduced, two_d, 1e-8, "2d path vs reduced path");
        Ok(())
    });
}

fn profile_suite(s: &mut Suite, opts: &VerifyOptions, quad: &QuadratureSpec) {
    let kappa = profiles::kappa() * opts.kappa_scale;
    s.close("kappa_from_moment_coefficient", profiles::moment_coefficient_closed() / 3.0, kappa, 1e-12 * profiles::kappa(), "κ in use vs closed moment coefficient / 3");
    s.close("kappa_printed", crate::constants::PRINTED_KAPPA, kappa, 1e-5 * crate::constants::PRINTED_KAPPA, "κ in use vs the printed 3.04326e-5 (relative 1e-5)");
    s.attempt("kappa_vs_moment_quadrature", |s| {
        let mc = profiles::moment_coefficient(&Moments::radial(1.0), quad, PrefactorMode::Oracle)?;
        s.close("kappa_vs_moment_quadrature", mc / 3.0, kappa, 1e-6 * mc / 3.0, "κ in use vs radial quadrature of the moment integral / 3");
        Ok(())
    });
    let m = Moments::radial(1.0);
    s.attempt("u1rad_mode_ratio", |s| {
        let p = SpaceTimePoint::new(2.0, [0.3, -0.7, 1.1]);
        let paper = profiles::eval_u1rad(&m, p, quad, PrefactorMode::Paper)?;
        let oracle = profiles::eval_u1rad(&m, p, quad, PrefactorMode::Oracle)?;
        s.close("u1rad_mode_ratio", 1.0 / PI.sqrt(), paper / oracle, 1e-10, "paper/oracle U1rad = 1/√π");
        Ok(())
    });
    s.attempt("u1rad_radial", |s| {
        let a = profiles::eval_u1rad(&m, SpaceTimePoint::new(3.0, [1.2, 0.0, 1.6]), quad, PrefactorMode::Oracle)?;
        let b = profiles::eval_u1rad(&m, SpaceTimePoint::new(3.0, [0.0, 2.0, 0.0]), quad, PrefactorMode::Oracle)?;
        s.below("u1rad_radial", rel(a, b), 1e-12, "same radius, different directions");
        Ok(())
    });
    s.attempt("duhamel_matches_j", |s| {
        let p = SpaceTimePoint::new(4.0, [0.5, 0.5, 0.0]);
        let j = profiles::eval_j(p, quad)?;
        let d = profiles::duhamel_quadratic_gaussian(1.0, 1.0, p, quad)?;
        s.below("duhamel_matches_j", rel(d, j), 1e-14, "m₀ = t₀ = 1 reduces the Duhamel term to J");
        Ok(())
    });
    s.attempt("u1rad_zero_mass", |s| {
        let res = quadrature::integrate_semi_infinite(
            |r| 4.0 * PI * r * r * profiles::eval_u1rad(&m, SpaceTimePoint::radial(1.0, r), quad, PrefactorMode::Oracle).unwrap_or(f64::NAN),
            0.0,
            &QuadratureSpec::new(1e-12, 1e-8),
        )?;
        s.below("u1rad_zero_mass", res.value.abs(), 1e-9, "|∫U1rad(1) dx|");
        Ok(())
    });
    let times: &[f64] = if opts.profile == Profile::Full { &[1.0, 4.0, 16.0, 64.0] } else { &[1.0, 4.0] };
    let dipole = Moments::new(1.0, [0.3, -0.2, 0.5]);
    for q in LqExponent::standard() {
        let odd = |p: SpaceTimePoint| profiles::eval_u1odd(&dipole, p);
        let rad = |p: SpaceTimePoint| profiles::eval_u1rad(&m, p, quad, PrefactorMode::Oracle);
        let terms: [(&str, &(dyn Fn(SpaceTimePoint) -> ddasym::Result<f64> + Sync), Symmetry); 2] =
            [("u1odd", &odd, Symmetry::Axial(dipole.m1)), ("u1rad", &rad, Symmetry::Radial)];
        for (label, term, sym) in terms {
            let name = format!("{label}_scaling_q{q}");
            s.attempt(&name.clone(), |s| {
                let norm_quad = QuadratureSpec::new(1e-14, 1e-9);
                let scaled: Vec<f64> = times
                    .iter()
                    .map(|&t| Ok(t.powf(q.gamma() + 0.5) * lq_norm_profile(term, sym, t, q, &norm_quad)?))
                    .collect::<ddasym::Result<_>>()?;
                let spread = scaled.iter().map(|v| rel(*v, scaled[0])).fold(0.0, f64::max);
                s.below(&name, spread, 1e-5, &format!("t^(γ+1/2)‖{label}(t)‖ over t in {times:?}"));
                Ok(())
            });
        }
    }
    if opts.profile == Profile::Full {
        s.attempt("j_minus_u1rad_slope", |s| {
            let slope = j_minus_u1rad_slope(quad)?;
            s.close("j_minus_u1rad_slope", -2.5, slope, 0.2, "log-log slope of |J(t,0) - U1rad(t,0)|, t = 4..256");
            Ok(())
        });
    }
}

/// Log-log slope of `|J(t, 0) - U₁ʳᵃᵈ(t, 0)|` (unit mass) over
/// `t ∈ {4, 8, …, 256}`.
pub fn j_minus_u1rad_slope(quad: &QuadratureSpec) -> ddasym::Result<f64> {
    let m = Moments::radial(1.0);
    let ts: Vec<f64> = (2..=8).map(|k| 2f64.powi(k)).collect();
    let diffs: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let p = SpaceTimePoint::new(t, [0.0; 3]);
            Ok((profiles::eval_j(p, quad)? - profiles::eval_u1rad(&m, p, quad, PrefactorMode::Oracle)?).abs())
        })
        .collect::<ddasym::Result<_>>()?;
    Ok(ddasym::analysis::fit_decay(&ts, &diffs, (0.0, f64::INFINITY))?.slope)
}

/// Runs the suites. Failed checks are reported, not returned as errors.
pub fn cmd_verify(opts: &VerifyOptions) -> CliResult<VerifyReport> {
    if !(opts.kappa_scale.is_finite()) {
        return Err(CliError::Usage("kappa scale must be finite".into()));
    }
    let quad = profiles::default_profile_spec();
    let mut checks = Vec::new();
    kernel_suite(&mut Suite { name: "kernel", checks: &mut checks }, opts, &quad);
    quadrature_suite(&mut Suite { name: "quadrature", checks: &mut checks }, &QuadratureSpec::new(1e-12, 1e-12));
    profile_suite(&mut Suite { name: "profiles", checks: &mut checks }, opts, &quad);
    let mut cfg = ddasym::config::ConfigFile::new();
    cfg.set("verify", "profile", format!("{:?}", opts.profile).to_lowercase());
    cfg.set("verify", "seed", opts.seed.to_string());
    cfg.set("verify", "kappa_scale", opts.kappa_scale.to_string());
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        version: ddasym::VERSION.into(),
        config_hash: cfg.hash_hex(),
        profile: opts.profile,
        seed: opts.seed,
        checks,
        passed,
    })
}
