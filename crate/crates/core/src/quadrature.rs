//! Adaptive Gauss–Kronrod quadrature with endpoint-singularity and
//! semi-infinite-tail handling.
//!
//! The integrals in this crate are all one- or two-dimensional after radial
//! reduction. Two shapes recur:
//!
//! * an `s^{-1/2}` singularity at the left end of a finite interval, removed
//!   exactly by the substitution `s = a + w²`;
//! * an algebraic tail `σ^{-p}` on `[a, ∞)`, compactified onto `[0, 1)` by
//!   `σ = a + (1 - v)^{-k} - 1`. With `k = 2/(p - 1)` the mapped integrand
//!   vanishes linearly at `v = 1`; `k = 1` is the plain rational map
//!   `σ = a + v/(1 - v)`.
//!
//! After substitution the integrands are smooth and a globally adaptive
//! G10K21 rule with bisection does the rest.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Axis, Error, Result};

/// Endpoint singularity declared by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SingularityHint {
    #[default]
    None,
    /// `f(s)·sqrt(s - a)` is bounded near the left endpoint `a`.
    InverseSqrtLeft,
}

/// Decay of the integrand at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TailHint {
    /// Faster than any power (exponential or Gaussian).
    #[default]
    None,
    /// `|f(σ)| ~ σ^{-p}` with `p > 1`.
    Algebraic(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth of any subinterval.
    pub max_depth: u32,
    pub singularity_hint: SingularityHint,
    pub tail_hint: TailHint,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 40,
            singularity_hint: SingularityHint::None,
            tail_hint: TailHint::None,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_singularity(mut self, hint: SingularityHint) -> Self {
        self.singularity_hint = hint;
        self
    }

    pub fn with_tail(mut self, hint: TailHint) -> Self {
        self.tail_hint = hint;
        self
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    /// Same hints, both tolerances divided by `factor`.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.abs_tol /= factor;
        self.rel_tol /= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) {
            return Err(Error::InvalidQuadrature(
                "tolerances must be non-negative".into(),
            ));
        }
        if self.abs_tol == 0.0 && self.rel_tol == 0.0 {
            return Err(Error::InvalidQuadrature(
                "at least one of abs_tol, rel_tol must be positive".into(),
            ));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidQuadrature("max_depth must be >= 1".into()));
        }
        if let TailHint::Algebraic(p) = self.tail_hint {
            if !(p > 1.0) {
                return Err(Error::InvalidQuadrature(format!(
                    "declared tail order {p} is not integrable (need p > 1)"
                )));
            }
        }
        Ok(())
    }

    fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

// QUADPACK G10K21 abscissae and weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_746_359_984,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const MAX_INTERVALS: usize = 50_000;

/// Requested tolerances below `ROUNDOFF_LEVEL · ∫|f|` are raised to it; each
/// panel's error estimate is floored at half of this by [`gk21`].
const ROUNDOFF_LEVEL: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One G10K21 panel: (Kronrod value, error estimate) with QUADPACK's
/// error rescaling.
fn gk21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err, res_abs)
}

/// Globally adaptive bisection on `[a, b]` for an integrand that is
/// already free of endpoint singularities.
fn adaptive<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    axis: Axis,
) -> Result<QuadratureResult> {
    let (value, error, abs) = gk21(f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        error,
        abs,
        depth: 0,
    });
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = abs;

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Tolerance {
                value: total,
                error_estimate: total_err,
                axis,
            });
        }
        if total_err <= spec.tolerance_for(total).max(ROUNDOFF_LEVEL * total_abs) {
            break;
        }
        let worst = *heap.peek().expect("heap never empty");
        if worst.depth >= spec.max_depth || heap.len() >= MAX_INTERVALS {
            return Err(Error::Tolerance {
                value: total,
                error_estimate: total_err,
                axis,
            });
        }
        heap.pop();
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1, a1) = gk21(f, worst.a, mid);
        let (v2, e2, a2) = gk21(f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += a1 + a2 - worst.abs;
        for (lo, hi, v, e, ab) in [(worst.a, mid, v1, e1, a1), (mid, worst.b, v2, e2, a2)] {
            heap.push(Panel {
                a: lo,
                b: hi,
                value: v,
                error: e,
                abs: ab,
                depth: worst.depth + 1,
            });
        }
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error_estimate) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(QuadratureResult {
        value,
        error_estimate,
        evaluations,
    })
}

fn with_axis(err: Error, axis: Axis) -> Error {
    match err {
        Error::Tolerance {
            value,
            error_estimate,
            ..
        } => Error::Tolerance {
            value,
            error_estimate,
            axis,
        },
        other => other,
    }
}

/// `∫_a^b f(s) ds`. With [`SingularityHint::InverseSqrtLeft`] the
/// substitution `s = a + w²` is applied before adaptive integration.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    integrate_finite_on_axis(&f, a, b, spec, Axis::Single)
}

fn integrate_finite_on_axis<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    axis: Axis,
) -> Result<QuadratureResult> {
    spec.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidQuadrature(format!(
            "finite interval requires a < b, got [{a}, {b}]"
        )));
    }
    match spec.singularity_hint {
        SingularityHint::None => adaptive(f, a, b, spec, axis),
        SingularityHint::InverseSqrtLeft => {
            let g = |w: f64| 2.0 * w * f(a + w * w);
            adaptive(&g, 0.0, (b - a).sqrt(), spec, axis)
        }
    }
}

/// Exponent of the tail map `σ = a + (1 - v)^{-k} - 1`.
fn tail_map_exponent(hint: TailHint) -> f64 {
    match hint {
        TailHint::None => 1.0,
        TailHint::Algebraic(p) => (2.0 / (p - 1.0)).max(1.0),
    }
}

/// `∫_a^∞ f(σ) dσ` via the compactifying map described in the module docs.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    integrate_semi_infinite_on_axis(&f, a, spec, Axis::Single)
}

fn integrate_semi_infinite_on_axis<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    spec: &QuadratureSpec,
    axis: Axis,
) -> Result<QuadratureResult> {
    spec.validate()?;
    if !a.is_finite() {
        return Err(Error::InvalidQuadrature(format!(
            "semi-infinite lower limit must be finite, got {a}"
        )));
    }
    let k = tail_map_exponent(spec.tail_hint);
    let g = |v: f64| {
        let one_minus = 1.0 - v;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let stretch = one_minus.powf(-k);
        let jac = k * stretch / one_minus;
        let val = f(a + stretch - 1.0);
        if jac.is_finite() && val != 0.0 {
            val * jac
        } else {
            0.0
        }
    };
    // The hint acts on the original variable, not on v.
    let mut mapped = *spec;
    mapped.singularity_hint = SingularityHint::None;
    adaptive(&g, 0.0, 1.0, &mapped, axis)
}

/// Iterated integral `∫_{s0}^{s1} ∫_0^∞ f(s, σ) dσ ds`, inner σ first.
///
/// The inner integrals run at `spec_sigma` tightened tenfold so that their
/// noise stays below the outer tolerance. The returned error estimate is the
/// outer estimate plus a bound on the propagated inner error.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    s_range: (f64, f64),
    spec_s: &QuadratureSpec,
    spec_sigma: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec_s.validate()?;
    spec_sigma.validate()?;
    let inner_spec = spec_sigma.tightened(10.0);
    let (s0, s1) = s_range;

    // Inner errors are scaled by the weight removed by the outer
    // substitution, so that the propagated bound stays finite.
    let weight = |s: f64| match spec_s.singularity_hint {
        SingularityHint::None => 1.0,
        SingularityHint::InverseSqrtLeft => (s - s0).max(0.0).sqrt(),
    };
    let scaled_inner_err = std::cell::Cell::new(0.0f64);
    let inner_evals = std::cell::Cell::new(0usize);
    let failure = std::cell::RefCell::new(None);

    let outer = |s: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match integrate_semi_infinite_on_axis(&|sigma| f(s, sigma), 0.0, &inner_spec, Axis::Inner)
        {
            Ok(r) => {
                scaled_inner_err.set(scaled_inner_err.get().max(r.error_estimate * weight(s)));
                inner_evals.set(inner_evals.get() + r.evaluations);
                r.value
            }
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let result = integrate_finite_on_axis(&outer, s0, s1, spec_s, Axis::Outer);
    if let Some(e) = failure.into_inner() {
        return Err(with_axis(e, Axis::Inner));
    }
    let result = result?;
    let inverse_weight_measure = match spec_s.singularity_hint {
        SingularityHint::None => s1 - s0,
        SingularityHint::InverseSqrtLeft => 2.0 * (s1 - s0).sqrt(),
    };
    Ok(QuadratureResult {
        value: result.value,
        error_estimate: result.error_estimate
            + scaled_inner_err.get() * inverse_weight_measure,
        evaluations: result.evaluations + inner_evals.get(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Fixed Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| half * wi).collect(),
    )
}
