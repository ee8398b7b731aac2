//! Moments, norms, decay fits and expansion residuals.
//!
//! Grid integrals are plain Riemann sums with the box center as origin; for
//! smooth, localized periodic data these are spectrally accurate. The grid
//! `L^∞` norm is the sample maximum, a lower bound for the true supremum.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::SpaceTimePoint;
use crate::profiles::{self, ExpansionSpec, Moments};
use crate::quadrature::{self, QuadratureSpec};
use crate::solver::{FieldState, GridSpec};

/// `q ∈ [1, ∞]`, with `γ_q = (3/2)(1 - 1/q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqExponent {
    q: f64,
}

impl LqExponent {
    pub const ONE: Self = Self { q: 1.0 };
    pub const TWO: Self = Self { q: 2.0 };
    pub const INF: Self = Self { q: f64::INFINITY };

    pub fn new(q: f64) -> Result<Self> {
        if q >= 1.0 {
            Ok(Self { q })
        } else {
            Err(Error::Config(format!("L^q exponent must lie in [1, inf], got {q}")))
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_infinite(&self) -> bool {
        self.q.is_infinite()
    }

    pub fn gamma(&self) -> f64 {
        if self.is_infinite() {
            1.5
        } else {
            1.5 * (1.0 - 1.0 / self.q)
        }
    }

    /// `1`, `2` and `∞`.
    pub fn standard() -> Vec<Self> {
        vec![Self::ONE, Self::TWO, Self::INF]
    }
}

impl std::fmt::Display for LqExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.q)
        }
    }
}

impl std::str::FromStr for LqExponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Self::INF),
            other => Self::new(
                other
                    .parse()
                    .map_err(|_| Error::Config(format!("cannot parse L^q exponent '{other}'")))?,
            ),
        }
    }
}

impl serde::Serialize for LqExponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Moments of a grid density: `M₀ = Σu h³`, `M₁ = -Σ x u h³`.
pub fn moments_of_grid(state: &FieldState) -> Moments {
    let g = state.grid;
    let plane = g.n * g.n;
    let partial: Vec<[f64; 4]> = state
        .density
        .par_chunks(plane)
        .enumerate()
        .map(|(z, chunk)| {
            let mut acc = [0.0; 4];
            for (i, &u) in chunk.iter().enumerate() {
                let x = g.position(z * plane + i);
                acc[0] += u;
                for j in 0..3 {
                    acc[j + 1] += x[j] * u;
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for p in &partial {
        for j in 0..4 {
            total[j] += p[j];
        }
    }
    let h3 = g.cell_volume();
    Moments::new(total[0] * h3, [-total[1] * h3, -total[2] * h3, -total[3] * h3])
}

/// `L^q` norm of grid values; plane sums are combined in a fixed order.
pub fn lq_norm_values(values: &[f64], grid: GridSpec, q: LqExponent) -> f64 {
    let plane = grid.n * grid.n;
    if q.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let qq = q.q();
    let partial: Vec<f64> = values
        .par_chunks(plane)
        .map(|c| {
            if qq == 1.0 {
                c.iter().map(|v| v.abs()).sum()
            } else if qq == 2.0 {
                c.iter().map(|v| v * v).sum()
            } else {
                c.iter().map(|v| v.abs().powf(qq)).sum()
            }
        })
        .collect();
    (partial.iter().sum::<f64>() * grid.cell_volume()).powf(1.0 / qq)
}

pub fn lq_norm_grid(state: &FieldState, q: LqExponent) -> f64 {
    lq_norm_values(&state.density, state.grid, q)
}

/// `‖ |x|^m u ‖_q` with `m ∈ {0, 1, 2}`.
pub fn weighted_norm_grid(state: &FieldState, m: u32, q: LqExponent) -> Result<f64> {
    if m > 2 {
        return Err(Error::Analysis(format!("weight exponent must be 0, 1 or 2, got {m}")));
    }
    if m == 0 {
        return Ok(lq_norm_grid(state, q));
    }
    let g = state.grid;
    let weighted: Vec<f64> = state
        .density
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let r2: f64 = g.position(i).iter().map(|v| v * v).sum();
            u * if m == 1 { r2.sqrt() } else { r2 }
        })
        .collect();
    Ok(lq_norm_values(&weighted, g, q))
}

/// Symmetry that reduces a profile norm to low-dimensional quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symmetry {
    /// `f(x) = f(|x|)`.
    Radial,
    /// `f` depends on `|x|` and the angle to a fixed axis, like `M₁·∇G`.
    Axial([f64; 3]),
}

/// Profiles at time `t` have decayed below any tolerance beyond this many
/// `√t`.
const PROFILE_REACH: f64 = 16.0;
const ROOT_SAMPLES: usize = 96;

/// Sign changes of `f` on `[a, b]`, located by bisection.
fn roots(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, samples: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a)?;
    for k in 1..=samples {
        let x1 = a + (b - a) * k as f64 / samples as f64;
        let f1 = f(x1)?;
        if f0 != 0.0 && f1 != 0.0 && f0.signum() != f1.signum() {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(out)
}

/// `∫_a^b |f|^q` split at the sign changes of `f`.
fn split_integral(
    f: &dyn Fn(f64) -> Result<f64>,
    weight: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    q: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut cuts = vec![a];
    cuts.extend(roots(f, a, b, ROOT_SAMPLES)?);
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let failure = std::cell::RefCell::new(None);
        let res = quadrature::integrate_finite(
            |x| match f(x) {
                Ok(v) => weight(x) * v.abs().powf(q),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            w[0],
            w[1],
            quad,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        total += res?.value;
    }
    Ok(total)
}

/// Maximum of `|f|` on `[a, b]`: dense sampling, then golden-section
/// refinement around the best sample.
fn max_abs(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, samples: usize) -> Result<(f64, f64)> {
    let mut best = (a, f(a)?.abs());
    for k in 1..=samples {
        let x = a + (b - a) * k as f64 / samples as f64;
        let v = f(x)?.abs();
        if v > best.1 {
            best = (x, v);
        }
    }
    let step = (b - a) / samples as f64;
    let (mut lo, mut hi) = ((best.0 - step).max(a), (best.0 + step).min(b));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (c, d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        if f(c)?.abs() >= f(d)?.abs() {
            hi = d;
        } else {
            lo = c;
        }
        if hi - lo < 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x)?.abs();
    Ok(if v >= best.1 { (x, v) } else { best })
}

/// `‖term(t, ·)‖_q` over ℝ³ by reduction to 1D (radial) or 2D (axial)
/// quadrature; `quad` drives the outer integrals.
pub fn lq_norm_profile(
    term: &(dyn Fn(SpaceTimePoint) -> Result<f64> + Sync),
    symmetry: Symmetry,
    t: f64,
    q: LqExponent,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let reach = PROFILE_REACH * t.sqrt();
    match symmetry {
        Symmetry::Radial => {
            let f = |r: f64| term(SpaceTimePoint::radial(t, r));
            if q.is_infinite() {
                return Ok(max_abs(&f, 0.0, reach, 400)?.1);
            }
            let w = |r: f64| 4.0 * PI * r * r;
            Ok(split_integral(&f, &w, 0.0, reach, q.q(), quad)?.powf(1.0 / q.q()))
        }
        Symmetry::Axial(axis) => {
            let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Analysis("axial symmetry needs a non-zero axis".into()));
            }
            let d = axis.map(|v| v / norm);
            // any unit vector orthogonal to d
            let helper = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dot: f64 = (0..3).map(|j| helper[j] * d[j]).sum();
            let mut e = [0.0; 3];
            for j in 0..3 {
                e[j] = helper[j] - dot * d[j];
            }
            let en = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            let e = e.map(|v| v / en);
            let at = move |r: f64, mu: f64| {
                let st = (1.0 - mu * mu).max(0.0).sqrt();
                let x = [0, 1, 2].map(|j| r * (mu * d[j] + st * e[j]));
                term(SpaceTimePoint::new(t, x))
            };
            if q.is_infinite() {
                let mut best = 0.0f64;
                for k in 0..=32 {
                    let mu = -1.0 + 2.0 * k as f64 / 32.0;
                    let (_, v) = max_abs(&|r| at(r, mu), 0.0, reach, 200)?;
                    best = best.max(v);
                }
                // refine in μ around the ends, where dipole-like terms peak
                for mu in [-1.0, 1.0] {
                    best = best.max(max_abs(&|r| at(r, mu), 0.0, reach, 400)?.1);
                }
                return Ok(best);
            }
            let qq = q.q();
            let inner = |r: f64| -> Result<f64> {
                let g = |mu: f64| at(r, mu);
                split_integral(&g, &|_| 2.0 * PI, -1.0, 1.0, qq, quad)
            };
            let failure = std::cell::RefCell::new(None);
            let res = quadrature::integrate_finite(
                |r| match inner(r) {
                    Ok(v) => r * r * v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                reach,
                quad,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(res?.value.powf(1.0 / qq))
        }
    }
}

/// Least-squares fit of `log value = intercept + slope · log t`, or of
/// `log(value / log t)` when `log_corrected`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub log_corrected: bool,
}

fn select_window(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    if times.len() != values.len() {
        return Err(Error::Analysis(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Analysis(format!(
            "decay fit needs at least 3 points in [{}, {}], got {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(Error::Analysis(format!("decay fit needs positive data, got {v} at t = {t}")));
    }
    Ok(pts)
}

fn least_squares(xy: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let pts = select_window(times, values, window)?;
    let xy: Vec<(f64, f64)> = pts.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let (slope, intercept, r_squared) = least_squares(&xy);
    Ok(DecayFit { slope, intercept, r_squared, window, n_points: xy.len(), log_corrected: false })
}

/// Fits `value = C t^p log t`; all in-window times must exceed 1.
pub fn fit_decay_log_corrected(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let pts = select_window(times, values, window)?;
    if let Some((t, _)) = pts.iter().find(|(t, _)| *t <= 1.0) {
        return Err(Error::Analysis(format!("log-corrected fit needs t > 1, got {t}")));
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|(t, v)| (t.ln(), (v / t.ln()).ln())).collect();
    let (slope, intercept, r_squared) = least_squares(&xy);
    Ok(DecayFit { slope, intercept, r_squared, window, n_points: xy.len(), log_corrected: true })
}

/// How snapshot times map to profile times and which snapshots count.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResidualOptions {
    /// Profile time is snapshot time plus this shift. For Gaussian data
    /// `G(t₀)` the shift `t₀` makes the linear part exact.
    pub time_shift: f64,
    /// Drop snapshots outside the valid window `6√T < L/4`.
    pub apply_window_rule: bool,
    /// Additional profile-time window for the fits.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { time_shift: 0.0, apply_window_rule: true, fit_window: None }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResidualRow {
    pub time: f64,
    pub profile_time: f64,
    pub q: LqExponent,
    pub residual: f64,
    /// Residual with `log(1+T)` in place of `log T` in the `K₂` term.
    pub residual_log1p: Option<f64>,
    pub norm_u: f64,
    pub norm_u0: f64,
    pub norm_u1odd: f64,
    pub norm_u1rad: f64,
    pub norm_k2log: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResidualFits {
    pub q: LqExponent,
    pub plain: Option<DecayFit>,
    pub log_corrected: Option<DecayFit>,
    pub plain_log1p: Option<DecayFit>,
    /// `-γ_q - 1/2` and `-γ_q - 1`.
    pub first_claim_target: f64,
    pub second_claim_target: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResidualReport {
    pub version: String,
    pub config_hash: String,
    pub expansion: ExpansionSpec,
    pub expansion_label: String,
    pub moments: Moments,
    pub options: ResidualOptions,
    pub q_list: Vec<LqExponent>,
    pub times: Vec<f64>,
    pub rows: Vec<ResidualRow>,
    pub fits: Vec<ResidualFits>,
    pub window_rule_applied: bool,
}

/// Per-point expansion terms sampled on a grid at one profile time.
struct SampledTerms {
    u0: Vec<f64>,
    u1odd: Vec<f64>,
    u1rad: Vec<f64>,
    k2: Vec<f64>,
}

fn sample_terms(
    grid: GridSpec,
    spec: &ExpansionSpec,
    m: &Moments,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<SampledTerms> {
    let len = grid.len();
    let h = grid.spacing();
    let keyed = |key: i64| (key as f64).sqrt() * h;
    // Radial terms are evaluated once per distinct squared integer radius.
    let keys: Vec<i64> = (0..len)
        .map(|i| grid.offsets(i).iter().map(|k| k * k).sum())
        .collect();
    let mut distinct: Vec<i64> = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let radial = |f: &(dyn Fn(f64) -> Result<f64> + Sync)| -> Result<Vec<f64>> {
        let vals: Vec<Result<(i64, f64)>> =
            distinct.par_iter().map(|&k| Ok((k, f(keyed(k))?))).collect();
        let table: HashMap<i64, f64> = vals.into_iter().collect::<Result<_>>()?;
        Ok(keys.iter().map(|k| table[k]).collect())
    };
    let zeros = || vec![0.0; len];
    let u0 = if spec.include_u0 {
        radial(&|r| profiles::eval_u0(m, SpaceTimePoint::radial(t, r)))?
    } else {
        zeros()
    };
    let u1rad = if spec.include_u1rad {
        radial(&|r| profiles::eval_u1rad(m, SpaceTimePoint::radial(t, r), quad, spec.prefactor_mode))?
    } else {
        zeros()
    };
    let k2 = if spec.include_k2log {
        radial(&|r| profiles::eval_k2(m, SpaceTimePoint::radial(t, r)))?
    } else {
        zeros()
    };
    let u1odd = if spec.include_u1odd {
        (0..len)
            .into_par_iter()
            .map(|i| profiles::eval_u1odd(m, SpaceTimePoint::new(t, grid.position(i))))
            .collect::<Result<Vec<f64>>>()?
    } else {
        zeros()
    };
    Ok(SampledTerms { u0, u1odd, u1rad, k2 })
}

/// `‖u(t) - expansion(T)‖_q` for each snapshot and `q`, with `T` the
/// profile time, plus log-log fits of the residuals against `T`.
pub fn residual_report(
    snapshots: &[FieldState],
    m: &Moments,
    spec: &ExpansionSpec,
    q_list: &[LqExponent],
    quad: &QuadratureSpec,
    options: &ResidualOptions,
) -> Result<ResidualReport> {
    spec.validate()?;
    if snapshots.is_empty() {
        return Err(Error::Analysis("residual report needs at least one snapshot".into()));
    }
    let q_list: Vec<LqExponent> = if q_list.is_empty() { LqExponent::standard() } else { q_list.to_vec() };
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for snap in snapshots {
        let profile_time = snap.time + options.time_shift;
        if !(profile_time > 0.0) {
            continue;
        }
        if options.apply_window_rule && profile_time >= snap.grid.window_limit() {
            continue;
        }
        times.push(snap.time);
        let terms = sample_terms(snap.grid, spec, m, profile_time, quad)?;
        let (log_t, log_1p) = (profile_time.ln(), profile_time.ln_1p());
        let approx = |log: f64| -> Vec<f64> {
            (0..snap.density.len())
                .map(|i| terms.u0[i] + terms.u1odd[i] + terms.u1rad[i] + terms.k2[i] * log)
                .collect()
        };
        let residual: Vec<f64> = snap.density.iter().zip(approx(log_t)).map(|(u, a)| u - a).collect();
        let residual_1p: Option<Vec<f64>> = spec
            .include_k2log
            .then(|| snap.density.iter().zip(approx(log_1p)).map(|(u, a)| u - a).collect());
        let k2log: Vec<f64> = terms.k2.iter().map(|v| v * log_t).collect();
        for &q in &q_list {
            let norm = |v: &[f64]| lq_norm_values(v, snap.grid, q);
            rows.push(ResidualRow {
                time: snap.time,
                profile_time,
                q,
                residual: norm(&residual),
                residual_log1p: residual_1p.as_deref().map(norm),
                norm_u: norm(&snap.density),
                norm_u0: norm(&terms.u0),
                norm_u1odd: norm(&terms.u1odd),
                norm_u1rad: norm(&terms.u1rad),
                norm_k2log: norm(&k2log),
            });
        }
    }
    let window = options.fit_window.unwrap_or((0.0, f64::INFINITY));
    let fits = q_list
        .iter()
        .map(|&q| {
            let sel: Vec<&ResidualRow> = rows.iter().filter(|r| r.q == q).collect();
            let ts: Vec<f64> = sel.iter().map(|r| r.profile_time).collect();
            let vs: Vec<f64> = sel.iter().map(|r| r.residual).collect();
            let vs1p: Vec<f64> = sel.iter().filter_map(|r| r.residual_log1p).collect();
            ResidualFits {
                q,
                plain: fit_decay(&ts, &vs, window).ok(),
                log_corrected: fit_decay_log_corrected(&ts, &vs, window).ok(),
                plain_log1p: if vs1p.len() == ts.len() { fit_decay(&ts, &vs1p, window).ok() } else { None },
                first_claim_target: -q.gamma() - 0.5,
                second_claim_target: -q.gamma() - 1.0,
            }
        })
        .collect();
    Ok(ResidualReport {
        version: crate::VERSION.to_string(),
        config_hash: format!("{:016x}", snapshots[0].provenance),
        expansion: *spec,
        expansion_label: spec.label(),
        moments: *m,
        options: *options,
        q_list,
        times,
        rows,
        fits,
        window_rule_applied: options.apply_window_rule,
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResidualReport {
    /// One row per `(t, q)`, preceded by `#` lines carrying the version and
    /// config hash.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# ddasym {} config_hash={} expansion={}\n",
            self.version, self.config_hash, self.expansion_label
        );
        out.push_str("time,profile_time,q,residual,residual_log1p,norm_u,norm_u0,norm_u1odd,norm_u1rad,norm_k2log\n");
        for r in &self.rows {
            let cols = [
                fmt17(r.time),
                fmt17(r.profile_time),
                r.q.to_string(),
                fmt17(r.residual),
                r.residual_log1p.map(fmt17).unwrap_or_else(|| "nan".into()),
                fmt17(r.norm_u),
                fmt17(r.norm_u0),
                fmt17(r.norm_u1odd),
                fmt17(r.norm_u1rad),
                fmt17(r.norm_k2log),
            ];
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Residuals for one `q`, in time order.
    pub fn residuals(&self, q: LqExponent) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.q == q).map(|r| (r.profile_time, r.residual)).collect()
    }
}
