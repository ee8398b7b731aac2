//! Acceptance criteria A1–A11, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always
//! printed. Arguments select criteria: `cargo test --test acceptance -- A1 A6`.
//! Exits non-zero if any selected criterion fails.

use std::cell::OnceCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use ddasym::analysis::{fit_decay, lq_norm_grid, lq_norm_profile, LqExponent, Symmetry};
use ddasym::fft::{signed_index, Fft3};
use ddasym::kernel::{self, SpaceTimePoint};
use ddasym::profiles::{self, ExpansionSpec, Moments};
use ddasym::solver::{self, FieldState, GridSpec, Interaction, PoissonMode, Preset, SolverConfig};
use ddasym::{PrefactorMode, QuadratureSpec};
use ddasym_cli::compare::{self, CompareOptions, CompareOutput};
use ddasym_cli::{constants, simulate, verify, RunConfig};
use num_complex::Complex64;

type Verdict = Result<(bool, String), String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn tight() -> QuadratureSpec {
    QuadratureSpec::new(1e-15, 1e-12)
}

fn a1() -> Verdict {
    let v = profiles::dimensionless_log_integral(&QuadratureSpec::new(1e-12, 1e-12)).map_err(|e| e.to_string())?;
    let err = (v - profiles::log_integral_closed()).abs();
    Ok((err < 1e-8, format!("dimensionless integral {v:.12} vs (2π-3√3)/6, |err| = {err:.2e} (< 1e-8)")))
}

fn a2() -> Verdict {
    let q = tight();
    let (mut worst, mut ratio_dev): (f64, f64) = (0.0, 0.0);
    for p in verify::sample_points(2, 50) {
        let closed = kernel::field_of_gaussian_closed(p).map_err(|e| e.to_string())?;
        let oracle = kernel::field_of_gaussian_sigma(p, &q, PrefactorMode::Oracle).map_err(|e| e.to_string())?;
        let paper = kernel::field_of_gaussian_sigma(p, &q, PrefactorMode::Paper).map_err(|e| e.to_string())?;
        for j in 0..3 {
            worst = worst.max((oracle[j] - closed[j]).abs() / closed.iter().map(|v| v.abs()).fold(0.0, f64::max));
            if oracle[j] != 0.0 {
                ratio_dev = ratio_dev.max((paper[j] / oracle[j] - 2.0 * PI.sqrt() / PI).abs());
            }
        }
    }
    Ok((
        worst < 1e-8 && ratio_dev < 1e-10,
        format!(
            "field: max rel err {worst:.2e} (< 1e-8); paper/oracle - 2√π/π = {ratio_dev:.1e} (< 1e-10), printed prefactor differs from the Gauss-law field by that ratio"
        ),
    ))
}

/// `∫ (G∇(-Δ)⁻¹G)_j(1, x) dx` by tensor Gauss–Legendre on `[-12, 12]³`
/// with panels placed asymmetrically, so odd cancellation is not built in.
fn product_integral() -> [f64; 3] {
    let cuts = [-12.0, -5.3, -1.7, 0.4, 2.9, 7.1, 12.0];
    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        let (x, wt) = ddasym::quadrature::gauss_legendre_on(24, w[0], w[1]);
        nodes.extend(x.into_iter().zip(wt));
    }
    use rayon::prelude::*;
    let partial: Vec<[f64; 3]> = nodes
        .par_iter()
        .map(|&(z, wz)| {
            let mut acc = [0.0; 3];
            for &(y, wy) in &nodes {
                for &(x, wx) in &nodes {
                    let v = kernel::gfg_product_direct(SpaceTimePoint::new(1.0, [x, y, z])).unwrap();
                    for j in 0..3 {
                        acc[j] += wx * wy * wz * v[j];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for p in partial {
        for j in 0..3 {
            total[j] += p[j];
        }
    }
    total
}

fn a3() -> Verdict {
    let q = tight();
    let mut worst: f64 = 0.0;
    for p in verify::sample_points(3, 50) {
        let s = kernel::gfg_product_sigma(p, &q).map_err(|e| e.to_string())?;
        let d = kernel::gfg_product_direct(p).map_err(|e| e.to_string())?;
        let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for j in 0..3 {
            worst = worst.max((s[j] - d[j]).abs() / scale);
        }
    }
    let integral = product_integral();
    let imax = integral.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok((
        worst < 1e-8 && imax < 1e-10,
        format!("product: max rel err {worst:.2e} (< 1e-8); componentwise integral max {imax:.1e} (< 1e-10)"),
    ))
}

fn a4() -> Verdict {
    let quad = QuadratureSpec::new(1e-14, 1e-9);
    let profile_quad = profiles::default_profile_spec();
    let dipole = Moments::new(1.0, [0.3, -0.2, 0.5]);
    let radial = Moments::radial(1.0);
    let odd = |p: SpaceTimePoint| profiles::eval_u1odd(&dipole, p);
    let rad = |p: SpaceTimePoint| profiles::eval_u1rad(&radial, p, &profile_quad, PrefactorMode::Oracle);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for q in LqExponent::standard() {
        for (label, term, sym) in [
            ("odd", &odd as &(dyn Fn(SpaceTimePoint) -> ddasym::Result<f64> + Sync), Symmetry::Axial(dipole.m1)),
            ("rad", &rad as &(dyn Fn(SpaceTimePoint) -> ddasym::Result<f64> + Sync), Symmetry::Radial),
        ] {
            let scaled: Vec<f64> = [1.0f64, 4.0, 16.0, 64.0]
                .iter()
                .map(|&t| lq_norm_profile(term, sym, t, q, &quad).map(|n| t.powf(q.gamma() + 0.5) * n))
                .collect::<ddasym::Result<_>>()
                .map_err(|e| e.to_string())?;
            let spread = scaled.iter().map(|v| rel(*v, scaled[0])).fold(0.0, f64::max);
            worst = worst.max(spread);
            detail.push(format!("{label}/q={q}:{spread:.0e}"));
        }
    }
    Ok((worst < 1e-5, format!("scaled norms constant over t ∈ {{1,4,16,64}}: max spread {worst:.2e} (< 1e-5) [{}]", detail.join(" "))))
}

fn a5() -> Verdict {
    let slope = verify::j_minus_u1rad_slope(&profiles::default_profile_spec()).map_err(|e| e.to_string())?;
    Ok(((-2.7..=-2.3).contains(&slope), format!("slope of |m₀²J(t,0) - U1rad(t,0)| over t = 4..256: {slope:.4} (in [-2.7, -2.3])")))
}

/// `J(t, 0)` from the spectral convolution `Σ_s w_s ∇G(t-s) ∗· P(1+s)`
/// with `P = G∇(-Δ)⁻¹G` sampled on the grid.
fn j_on_grid(t: f64, n: usize, l: f64, s_nodes: usize) -> f64 {
    let g = GridSpec::new(n, l).unwrap();
    let fft = Fft3::new(n);
    let h = fft.half();
    let k = |i: usize, odd: bool| {
        if odd && i == n / 2 {
            0.0
        } else {
            2.0 * PI * signed_index(i, n) as f64 / l
        }
    };
    let mut acc = fft.zeroed_spectrum();
    let (ss, ws) = ddasym::quadrature::gauss_legendre_on(s_nodes, 0.0, t);
    for (&s, &w) in ss.iter().zip(&ws) {
        let fields: Vec<[f64; 3]> = {
            use rayon::prelude::*;
            (0..g.len())
                .into_par_iter()
                .map(|i| kernel::gfg_product_direct(SpaceTimePoint::new(1.0 + s, g.position(i))).unwrap())
                .collect()
        };
        for j in 0..3 {
            let comp: Vec<f64> = fields.iter().map(|v| v[j]).collect();
            let mut spec = fft.zeroed_spectrum();
            fft.forward(&comp, &mut spec);
            for kz in 0..n {
                for ky in 0..n {
                    for kx in 0..h {
                        let idx = kx + h * (ky + n * kz);
                        let xi2 = k(kx, false).powi(2) + k(ky, false).powi(2) + k(kz, false).powi(2);
                        let xij = [k(kx, true), k(ky, true), k(kz, true)][j];
                        acc[idx] += spec[idx] * Complex64::new(0.0, xij) * (w * (-(t - s) * xi2).exp());
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; g.len()];
    fft.inverse(&mut acc, &mut out);
    out[g.index(n / 2, n / 2, n / 2)]
}

fn a6() -> Verdict {
    let quad = QuadratureSpec::new(1e-15, 1e-12);
    let collapsed = profiles::eval_j(SpaceTimePoint::new(4.0, [0.0; 3]), &quad).map_err(|e| e.to_string())?;
    let grid = j_on_grid(4.0, 128, 32.0, 64);
    let err = rel(grid, collapsed);
    Ok((err < 1e-3, format!("J(4,0): collapsed {collapsed:.10e}, grid convolution {grid:.10e}, rel diff {err:.2e} (< 1e-3)")))
}

fn a7() -> Verdict {
    let g = GridSpec::new(64, 32.0).map_err(|e| e.to_string())?;
    let preset = Preset::CenteredGaussian { mass: 1.0, width: 1.0 };

    // (i) heat flow
    let mut heat = SolverConfig::new(g, 0.1, 1.0);
    heat.interaction = Interaction::Disabled;
    let out = solver::run(&heat, solver::init_density(g, preset).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let last = out.snapshots.last().unwrap();
    let exact = FieldState::from_fn(g, 1.0, |x| kernel::heat_kernel(SpaceTimePoint::new(2.0, x)).unwrap());
    let heat_err = last.density.iter().zip(&exact.density).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // (ii) mass over 10⁴ nonlinear steps
    let mut long = SolverConfig::new(g, 0.01, 100.0);
    long.poisson_mode = PoissonMode::TorusNeutralized;
    let init = solver::init_density(g, Preset::OffsetGaussian { mass: 1.0, width: 1.0, offset: [1.0, 0.0, 0.0] })
        .map_err(|e| e.to_string())?;
    let manifest = solver::run_with(&long, init, |_| Ok(())).map_err(|e| e.to_string())?;
    let drift = manifest.mass_drift();
    let steps = manifest.steps;

    // (iii) cubic remainder of the perturbation expansion
    let c = [1.0, 0.0, 0.0];
    let t_end = 1.0;
    let quad = QuadratureSpec::new(1e-14, 1e-11);
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let hsp = g.spacing();
    let ci: Vec<i64> = c.iter().map(|v| (v / hsp).round() as i64).collect();
    let mut q2 = vec![0.0; g.len()];
    for (i, slot) in q2.iter_mut().enumerate() {
        let o = g.offsets(i);
        let key: i64 = (0..3).map(|j| (o[j] - ci[j]).pow(2)).sum();
        if !cache.contains_key(&key) {
            let v = profiles::duhamel_quadratic_gaussian(1.0, 1.0, SpaceTimePoint::radial(t_end, (key as f64).sqrt() * hsp), &quad)
                .map_err(|e| e.to_string())?;
            cache.insert(key, v);
        }
        *slot = cache[&key];
    }
    let mut errs = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let init = solver::init_density(g, Preset::OffsetGaussian { mass: eps, width: 1.0, offset: c }).map_err(|e| e.to_string())?;
        let out = solver::run(&SolverConfig::new(g, 0.025, t_end), init).map_err(|e| e.to_string())?;
        let u = out.snapshots.last().unwrap();
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            let x = g.position(i);
            let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
            let lin = eps * kernel::heat_kernel(SpaceTimePoint::new(1.0 + t_end, d)).map_err(|e| e.to_string())?;
            err = err.max((u.density[i] - lin - eps * eps * q2[i]).abs());
        }
        errs.push(err);
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let cubic = ratios.iter().all(|r| (6.0..=10.0).contains(r));
    Ok((
        heat_err < 1e-8 && drift < 1e-10 && steps >= 10_000 && cubic,
        format!(
            "(i) heat max err {heat_err:.1e} (< 1e-8); (ii) mass drift {drift:.1e} over {steps} steps (< 1e-10); (iii) remainder {:.2e}/{:.2e}/{:.2e}, ratios {:.2}, {:.2} (in [6, 10])",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    ))
}

fn a8() -> Verdict {
    let g = GridSpec::new(128, 64.0).map_err(|e| e.to_string())?;
    let t0 = 1.0;
    let t_end = g.window_limit() - t0 - 1e-9;
    let mut cfg = SolverConfig::new(g, 0.1, (t_end * 10.0).floor() / 10.0);
    cfg.interaction = Interaction::Disabled;
    cfg.snapshot_times = (1..).map(|k| k as f64 * 0.25).take_while(|&t| t <= cfg.t_end).collect();
    let init = solver::init_density(g, Preset::CenteredGaussian { mass: 1.0, width: t0 }).map_err(|e| e.to_string())?;
    let out = solver::run(&cfg, init).map_err(|e| e.to_string())?;
    let times: Vec<f64> = out.snapshots.iter().map(|s| s.time + t0).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [LqExponent::TWO, LqExponent::INF] {
        let norms: Vec<f64> = out.snapshots.iter().map(|s| lq_norm_grid(s, q)).collect();
        let fit = fit_decay(&times, &norms, (0.0, g.window_limit())).map_err(|e| e.to_string())?;
        ok &= (fit.slope + q.gamma()).abs() <= 0.02;
        parts.push(format!("q={q}: {:.4} vs {:.2}", fit.slope, -q.gamma()));
    }
    Ok((ok, format!("heat-only slopes over T ∈ [{t0}, {:.2}]: {} (±0.02)", times.last().unwrap(), parts.join(", "))))
}

const DECAY_CONFIG: &str = "
[grid]
n = 128
box_length = 64
[solver]
dt = 0.1
t_end = 6.1
snapshot_every = 0.5
[initial]
preset = offset_gaussian
mass = 1
width = 1
offset = 1, 0, 0
[compare]
q = 1, inf
";

struct DecayRun {
    out: CompareOutput,
}

fn decay_run() -> Result<DecayRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig::parse(DECAY_CONFIG).map_err(|e| e.to_string())?;
    simulate::cmd_simulate(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let opts = CompareOptions {
        expansions: vec![ExpansionSpec::u0_only(), ExpansionSpec::first_order(), ExpansionSpec::full()],
        q_list: cfg.q_list.clone(),
        fit_window: None,
        time_shift: None,
        apply_window_rule: true,
        quad: cfg.quad,
    };
    let out = compare::cmd_compare(dir.path(), dir.path(), &opts).map_err(|e| e.to_string())?;
    Ok(DecayRun { out })
}

fn a9(run: &DecayRun) -> Verdict {
    let u0 = &run.out.reports[0];
    let fit = u0
        .fits
        .iter()
        .find(|f| f.q == LqExponent::INF)
        .and_then(|f| f.plain.clone())
        .ok_or("no L^inf fit")?;
    let bound = -LqExponent::INF.gamma() - 0.3;
    Ok((
        fit.slope <= bound,
        format!(
            "slope of ‖u - M₀G‖_∞ over T ∈ [{:.2}, {:.2}] ({} snapshots): {:.4} (<= {bound:.2}; theory -2.0)",
            u0.rows.first().map(|r| r.profile_time).unwrap_or(f64::NAN),
            u0.rows.last().map(|r| r.profile_time).unwrap_or(f64::NAN),
            fit.n_points,
            fit.slope
        ),
    ))
}

fn a10(run: &DecayRun) -> Verdict {
    let [u0, first, full] = [&run.out.reports[0], &run.out.reports[1], &run.out.reports[2]];
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [LqExponent::ONE, LqExponent::INF] {
        let o = compare::ordering(u0, first, q);
        ok &= o.richer_smaller_everywhere;
        parts.push(format!("first/u0 q={q} worst ratio {:.3}", o.worst_ratio));
    }
    let a = first.residuals(LqExponent::INF);
    let b = full.residuals(LqExponent::INF);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for ((t, ra), (_, rb)) in a.iter().zip(&b) {
        if *t >= std::f64::consts::E {
            worst = worst.max(rb / ra);
            count += 1;
        }
    }
    ok &= worst <= 1.0 && count > 0;
    parts.push(format!("full/first q=inf worst ratio {worst:.7} over {count} times with T >= e (<= 1)"));
    Ok((ok, parts.join("; ")))
}

fn a11() -> Verdict {
    let table = constants::cmd_constants(&profiles::default_profile_spec()).map_err(|e| e.to_string())?;
    let get = |n: &str| table.get(n).cloned().ok_or(format!("missing row {n}"));
    let kappa = get("kappa")?;
    let mc = get("moment_coefficient")?;
    let paths = get("log_integral_paths")?;
    let paper = get("moment_coefficient_quad_paper")?;
    let oracle = get("moment_coefficient_quad_oracle")?;
    let ratio = get("moment_coefficient_paper_over_oracle")?;
    let kd = kappa.rel_diff.unwrap_or(f64::NAN);
    let md = mc.rel_diff.unwrap_or(f64::NAN);
    let pd = (paths.value - paths.reference.unwrap_or(f64::NAN)).abs();
    Ok((
        kd < 1e-5 && md < 1e-5 && pd < 1e-8 && rel(oracle.value, mc.value) < 1e-6,
        format!(
            "κ {:.7e} vs 3.04326e-5 (rel {kd:.1e}); moment coefficient {:.7e} vs 9.12978e-5 (rel {md:.1e}); quadrature oracle {:.7e} / paper {:.7e}, ratio {:.10} (1/√π); 2d vs reduced integral |diff| {pd:.1e} (< 1e-8)",
            kappa.value, mc.value, oracle.value, paper.value, ratio.value
        ),
    ))
}

/// Runtime budgets in seconds.
const BUDGETS: [(&str, u64); 11] = [
    ("A1", 1),
    ("A2", 5),
    ("A3", 10),
    ("A4", 120),
    ("A5", 120),
    ("A6", 180),
    ("A7", 600),
    ("A8", 300),
    ("A9", 900),
    ("A10", 900),
    ("A11", 60),
];

fn main() {
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| selected.is_empty() || selected.iter().any(|s| s.eq_ignore_ascii_case(id));
    let decay: OnceCell<(Result<DecayRun, String>, Duration)> = OnceCell::new();
    let decay_run = || {
        decay.get_or_init(|| {
            let start = Instant::now();
            (decay_run(), start.elapsed())
        })
    };
    let mut failures = 0;
    for (id, budget) in BUDGETS {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let verdict = match id {
            "A1" => a1(),
            "A2" => a2(),
            "A3" => a3(),
            "A4" => a4(),
            "A5" => a5(),
            "A6" => a6(),
            "A7" => a7(),
            "A8" => a8(),
            "A9" | "A10" => {
                let (run, _) = decay_run();
                match run {
                    Ok(run) if id == "A9" => a9(run),
                    Ok(run) => a10(run),
                    Err(e) => Err(e.clone()),
                }
            }
            _ => a11(),
        };
        // A9 and A10 share one run; its time counts toward both.
        let mut elapsed = start.elapsed();
        if id == "A10" {
            elapsed += decay.get().map(|d| d.1).unwrap_or_default();
        }
        let in_budget = elapsed.as_secs_f64() < budget as f64;
        let (passed, text) = match verdict {
            Ok((p, t)) => (p && in_budget, t),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{id:<3} {} [{:.1} s / {budget} s] {text}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
