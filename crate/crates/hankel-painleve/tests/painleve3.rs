use hankel_painleve::numkernel::{abs, QuadratureSpec, StepPolicy};
use hankel_painleve::painleve3::*;
use hankel_painleve::weight::WeightParams;
use hankel_painleve::Error;
use proptest::prelude::*;
use rug::{Complex, Float};

const P: u32 = 256;

fn cf(x: f64) -> Complex {
    Complex::with_val(P, x)
}

#[test]
fn params_and_s() {
    let pp = P3Params::new(2, 3).unwrap();
    assert_eq!(pp.m(), 3 * (2 * 2 + 1 + 3));
    assert_eq!(pp.theta0(), 3);
    assert_eq!(pp.theta_inf(), -7);
    // principal root: s = −n√t for t > 0, imaginary for t < 0
    let s = pp.s(&cf(0.25));
    assert!(abs(&(s + 1.5f64)).to_f64() < 1e-70);
    let s = pp.s(&cf(-0.04));
    assert!(s.real().is_zero() && (s.imag().to_f64() - 0.6).abs() < 1e-15);
    assert!(matches!(P3Params::new(1, 0), Err(Error::Domain(_))));
}

#[test]
fn second_series_coefficient() {
    // a = t + c t² + …; the t³ balance gives c(1 − n²) = m
    for (k, n) in [(1u32, 2u32), (2, 3), (3, 4), (0, 5)] {
        let pp = P3Params::new(k, n).unwrap();
        let s = PsiSeries::build(pp, &cf(0.0), 8).unwrap();
        let expect = -Float::with_val(P, pp.m()) / (n * n - 1);
        assert!(abs(&(s.c2() - &expect)).to_f64() < 1e-60, "k={k} n={n}");
    }
}

#[test]
fn series_satisfies_the_ode() {
    let pp = P3Params::new(1, 2).unwrap();
    let b = Complex::with_val(P, (0.3, -0.1));
    let s = PsiSeries::build(pp, &b, 60).unwrap();
    let t = cf(0.02);
    let h = Float::with_val(P, 1e-20);
    let (a, da, tail) = s.eval(&t);
    assert!(tail.to_f64() < 1e-40);
    let (ap, dap, _) = s.eval(&Complex::with_val(P, &t + &h));
    let (am, dam, _) = s.eval(&Complex::with_val(P, &t - &h));
    // a′ from the series against a difference of a; a″ from a′
    let fd = Complex::with_val(P, &ap - &am) / Float::with_val(P, &h * 2u32);
    assert!(abs(&(fd - &da)).to_f64() < 1e-30);
    let d2a = Complex::with_val(P, &dap - &dam) / Float::with_val(P, &h * 2u32);
    assert!(ode_residual_normalised(&pp, &t, &a, &da, &d2a).to_f64() < 1e-30);
}

#[test]
fn hankel_a_starts_like_t() {
    let k = 1;
    let n = 3;
    let c = -Float::with_val(P, n * (2 * k + 1 + n)) / (n * n - 1);
    let t = Float::with_val(P, 1e-3);
    let w = WeightParams::new(n, 1e-3, 0.5, P);
    let a = hankel_a(k, &w, &QuadratureSpec::new(P)).unwrap();
    let slope = (a - &t) / Float::with_val(P, t.square_ref());
    assert!(abs(&(slope - &c)).to_f64() < 0.05 * c.to_f64().abs(), "{}", c.to_f64());
}

#[test]
fn fitted_launch_reproduces_target_and_matches_hankel() {
    let p = 256;
    let spec = QuadratureSpec::new(p);
    let w = WeightParams::new(2, 0.1, 0.5, p);
    let tf = Float::with_val(p, 0.0125);
    let traj = p3_solve_from_hankel(1, &w, &tf, &Float::with_val(p, 0.2), &spec, 1e-20).unwrap();
    let target = hankel_a(1, &w.with_t(&tf), &spec).unwrap();
    let (a0, _, _) = traj.series.eval(&Complex::with_val(p, &tf));
    assert!(abs(&(a0 - &target)).to_f64() < 1e-30);
    let grid = [Float::with_val(p, 0.1), Float::with_val(p, 0.2)];
    for pt in p3_verify(1, &w, &traj, &grid, &spec).unwrap() {
        assert!(pt.deviation.to_f64() < 1e-12, "t={} dev={}", pt.t.to_f64(), pt.deviation.to_f64());
        assert!(pt.hankel_residual.to_f64() < 1e-12);
    }
}

#[test]
fn u_transform_residual() {
    let p = 256;
    let w = WeightParams::new(2, 0.1, 0.5, p);
    let grid = [Float::with_val(p, 0.15)];
    let pts = u_transform_check(1, &w, &grid, &QuadratureSpec::new(p), &StepPolicy::for_precision(p)).unwrap();
    assert!(pts[0].residual.to_f64() < 1e-6);
    assert!(abs(&(Complex::with_val(p, &pts[0].roundtrip) - 1u32)).to_f64() < 1e-60);
}

#[test]
fn first_integral_vanishes() {
    let p = 256;
    for t in [0.1, -0.04] {
        let w = WeightParams::new(3, t, 0.5, p);
        let fi = first_integral_check(2, &w, &QuadratureSpec::new(p), &StepPolicy::for_precision(p)).unwrap();
        assert!(fi.residual.to_f64() < 1e-8, "t={t}: {}", fi.residual.to_f64());
    }
    let w = WeightParams::new(3, 0.1, 0.5, p);
    assert!(first_integral_check(0, &w, &QuadratureSpec::new(p), &StepPolicy::for_precision(p)).is_err());
}

#[test]
fn lax_coefficients() {
    let p = 256;
    let w = WeightParams::new(2, 0.1, 0.5, p);
    let lams = [Complex::with_val(p, (0.7, 0.9)), Complex::with_val(p, (-1.2, 0.4))];
    let lax = lax_check(1, &w, &lams, &QuadratureSpec::new(p)).unwrap();
    assert!(abs(&lax.trace_a_m1).to_f64() < 1e-60);
    let d = Complex::with_val(p, &lax.det_a_m2 - &lax.det_expected);
    assert!(abs(&d).to_f64() < 1e-40 * (1.0 + abs(&lax.det_expected).to_f64()));
    for (_, r) in lax.samples.iter() {
        assert!(r.to_f64() < 1e-8, "{}", r.to_f64());
    }
    let w0 = WeightParams::new(2, 0.0, 0.5, p);
    assert!(matches!(lax_check(1, &w0, &lams, &QuadratureSpec::new(p)), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn s_squared_is_n_squared_t(re in -1.0f64..1.0, im in -1.0f64..1.0, n in 1u32..9) {
        let pp = P3Params::new(1, n).unwrap();
        let t = Complex::with_val(128, (re, im));
        let s = pp.s(&t);
        let lhs = Complex::with_val(128, s.square_ref());
        let rhs = Complex::with_val(128, &t * (n * n));
        prop_assert!(abs(&(lhs - rhs)).to_f64() < 1e-30);
    }

    #[test]
    fn launch_constant_enters_at_resonant_order(b in -2.0f64..2.0, n in 2u32..5) {
        // terms below t^{n+1} do not depend on B
        let pp = P3Params::new(1, n).unwrap();
        let s0 = PsiSeries::build(pp, &Complex::with_val(128, 0), 12).unwrap();
        let s1 = PsiSeries::build(pp, &Complex::with_val(128, b), 12).unwrap();
        for i in 0..n as usize {
            for (x, y) in s0.terms[i].iter().zip(s1.terms[i].iter()) {
                prop_assert!(abs(&Complex::with_val(128, x - y)).to_f64() < 1e-30);
            }
        }
        let t = Complex::with_val(128, 0.01);
        let (a0, _, _) = s0.eval(&t);
        let (a1, _, _) = s1.eval(&t);
        prop_assert!(abs(&(a0 - a1)).to_f64() < 10.0 * (1.0 + b.abs()) * 0.01f64.powi(n as i32 + 1) * 5.0);
    }
}
