use super::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn q() -> QuadratureSpec {
    QuadratureSpec::new(1e-13, 1e-11)
}

/// `4π ∫₀^∞ r² f(r) dr`.
fn radial_integral(f: impl Fn(f64) -> f64) -> f64 {
    let spec = QuadratureSpec::new(1e-14, 1e-10);
    4.0 * PI * quadrature::integrate_semi_infinite(|r| r * r * f(r), 0.0, &spec).unwrap().value
}

#[test]
fn constants() {
    assert!((kappa() - 3.04327e-5).abs() < 1e-10);
    assert!(rel(moment_coefficient_closed(), 3.0 * kappa()) < 1e-15);
    assert!((log_integral_closed() - 0.181_172_147).abs() < 1e-9);
    assert!(rel(u1rad_prefactor(PrefactorMode::Paper) / u1rad_prefactor(PrefactorMode::Oracle), 1.0 / PI.sqrt()) < 1e-14);
}

#[test]
fn leading_terms() {
    let m = Moments::new(1.0, [1.0, 0.0, 0.0]);
    let p0 = SpaceTimePoint::new(1.0, [0.0; 3]);
    assert!(rel(eval_u0(&m, p0).unwrap(), (4.0 * PI).powf(-1.5)) < 1e-15);
    assert_eq!(eval_u0(&Moments::default(), SpaceTimePoint::radial(2.0, 1.0)).unwrap(), 0.0);
    assert_eq!(eval_u1odd(&m, p0).unwrap(), 0.0);
    let v = eval_u1odd(&m, SpaceTimePoint::radial(1.0, 1.0)).unwrap();
    assert!((v + 8.74141e-3).abs() < 1e-8);
    let w = eval_u1odd(&m, SpaceTimePoint::radial(1.0, -1.0)).unwrap();
    assert_eq!(v, -w);
}

#[test]
fn u1rad_basics() {
    let m = Moments::radial(1.0);
    assert_eq!(eval_u1rad(&Moments::default(), SpaceTimePoint::radial(1.0, 1.0), &q(), PrefactorMode::Oracle).unwrap(), 0.0);
    let a = eval_u1rad(&m, SpaceTimePoint::new(1.0, [1.0, 0.0, 0.0]), &q(), PrefactorMode::Oracle).unwrap();
    let b = eval_u1rad(&m, SpaceTimePoint::new(1.0, [0.0, 1.0, 0.0]), &q(), PrefactorMode::Oracle).unwrap();
    let c = eval_u1rad(&m, SpaceTimePoint::new(1.0, [0.6, 0.0, 0.8]), &q(), PrefactorMode::Oracle).unwrap();
    assert!((a - b).abs() < 1e-10 && (a - c).abs() < 1e-10);
    let paper = eval_u1rad(&m, SpaceTimePoint::radial(1.0, 1.0), &q(), PrefactorMode::Paper).unwrap();
    assert!(rel(paper / a, 1.0 / PI.sqrt()) < 1e-12);
    assert!(eval_u1rad(&m, SpaceTimePoint::radial(0.0, 1.0), &q(), PrefactorMode::Oracle).is_err());
}

#[test]
fn zero_mean_terms() {
    let m = Moments::radial(1.0);
    let u1 = radial_integral(|r| eval_u1rad(&m, SpaceTimePoint::radial(2.0, r), &q(), PrefactorMode::Oracle).unwrap());
    let j = radial_integral(|r| eval_j(SpaceTimePoint::radial(2.0, r), &q()).unwrap());
    let k2 = radial_integral(|r| eval_k2(&m, SpaceTimePoint::radial(2.0, r)).unwrap());
    for v in [u1, j, k2] {
        assert!(v.abs() < 1e-10, "{v}");
    }
    let full = radial_integral(|r| eval_expansion(&ExpansionSpec::full(), &Moments::radial(1.5), SpaceTimePoint::radial(3.0, r), &q()).unwrap());
    assert!((full - 1.5).abs() < 1e-9);
}

#[test]
fn duhamel_at_unit_shift_is_j() {
    for (t, r) in [(0.5, 0.0), (2.0, 1.3), (4.0, 3.0)] {
        let p = SpaceTimePoint::radial(t, r);
        let j = eval_j(p, &q()).unwrap();
        let d = duhamel_quadratic_gaussian(0.7, 1.0, p, &q()).unwrap();
        assert!((d - 0.49 * j).abs() < 1e-9 * j.abs().max(1e-3), "{d} {j}");
    }
    assert_eq!(duhamel_quadratic_gaussian(0.0, 1.0, SpaceTimePoint::radial(1.0, 0.0), &q()).unwrap(), 0.0);
    assert!(duhamel_quadratic_gaussian(1.0, 0.0, SpaceTimePoint::radial(1.0, 0.0), &q()).is_err());
}

#[test]
fn log_term() {
    let m = Moments::radial(1.0);
    for r in [0.0, 0.5, 2.0] {
        assert_eq!(eval_k2_log_term(&m, SpaceTimePoint::radial(1.0, r)).unwrap(), 0.0);
    }
    for lam in [0.5f64, 2.0] {
        let p = SpaceTimePoint::new(1.3, [0.2, -0.4, 0.9]);
        let s = SpaceTimePoint::new(lam * lam * 1.3, p.x.map(|v| lam * v));
        let (a, b) = (lam.powi(5) * eval_k2(&m, s).unwrap(), eval_k2(&m, p).unwrap());
        assert!((a - b).abs() < 1e-10 * b.abs());
    }
    // -κ ΔG log t with ΔG(t, 0) < 0 is positive at the origin for t > 1
    assert!(eval_k2_log_term(&m, SpaceTimePoint::radial(3.0, 0.0)).unwrap() > 0.0);
}

#[test]
fn dimensionless_integral() {
    let v = dimensionless_log_integral(&QuadratureSpec::new(1e-12, 1e-12)).unwrap();
    assert!((v - log_integral_closed()).abs() < 1e-8, "{v}");
    // w-substituted integrand 2w·f(w², 0) → 2·(1/2)·4^{-3/2}·... at w → 0
    let f = |w: f64| 2.0 * w * (w * w).powf(-0.5) / (2.0 * (4.0 - w * w).powf(1.5));
    assert!((f(1e-9) - 0.125).abs() < 1e-12);
    let r = dimensionless_log_integral_reduced(&QuadratureSpec::new(1e-13, 1e-13)).unwrap();
    assert!((r - log_integral_closed()).abs() < 1e-11, "{r}");
    assert!((r - v).abs() < 1e-8);
}

#[test]
fn moment_coefficient_oracle_reproduces_closed_form() {
    let m = Moments::radial(1.0);
    let spec = QuadratureSpec::new(1e-13, 1e-10);
    let oracle = moment_coefficient(&m, &spec, PrefactorMode::Oracle).unwrap();
    assert!(rel(oracle, moment_coefficient_closed()) < 1e-6, "{oracle}");
    let paper = moment_coefficient(&m, &spec, PrefactorMode::Paper).unwrap();
    assert!(rel(paper / oracle, 1.0 / PI.sqrt()) < 1e-9);
    assert_eq!(moment_coefficient(&Moments::default(), &spec, PrefactorMode::Oracle).unwrap(), 0.0);
    let m2 = moment_coefficient(&Moments::radial(2.0), &spec, PrefactorMode::Oracle).unwrap();
    assert!(rel(m2, 8.0 * oracle) < 1e-9);
}

#[test]
fn expansion_assembly() {
    let m = Moments::new(1.0, [0.3, 0.0, 0.0]);
    let p = SpaceTimePoint::new(2.0, [0.5, 0.2, 0.0]);
    let u0 = eval_expansion(&ExpansionSpec::u0_only(), &m, p, &q()).unwrap();
    assert_eq!(u0, kernel::heat_kernel(p).unwrap());
    let bad = ExpansionSpec { include_u1rad: false, ..ExpansionSpec::full() };
    assert!(bad.validate().is_err());
    assert_eq!(ExpansionSpec::full().label(), "u0+u1odd+u1rad+k2log");
    let terms = eval_terms(&ExpansionSpec::full(), &Moments::radial(1.0), SpaceTimePoint::radial(4.0, 0.0), &q()).unwrap();
    assert!(terms.u0 > 0.0 && terms.u1rad.is_finite() && terms.k2log > 0.0);
    assert_eq!(terms.u1odd, 0.0);
}
