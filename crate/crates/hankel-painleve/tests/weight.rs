use hankel_painleve::numkernel::{abs, QuadratureSpec};
use hankel_painleve::weight::*;
use hankel_painleve::Error;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float};

const P: u32 = 256;

/// K_m(x) for integer m from the ascending series with digamma terms.
fn bessel_k_series(m: u32, x: &Float) -> Float {
    let p = x.prec() + 64;
    let x = Float::with_val(p, x);
    let half = Float::with_val(p, &x / 2u32);
    let q = Float::with_val(p, half.square_ref());
    let fact = |k: u32| -> Float {
        let mut f = Float::with_val(p, 1);
        for i in 2..=k {
            f *= i;
        }
        f
    };
    let euler = Float::with_val(p, rug::float::Constant::Euler);
    let psi = |k: u32| -> Float {
        // ψ(k) = −γ + Σ_{i<k} 1/i
        let mut s = -euler.clone();
        for i in 1..k {
            s += Float::with_val(p, 1) / i;
        }
        s
    };
    let mut first = Float::with_val(p, 0);
    let mut qk = Float::with_val(p, 1);
    for k in 0..m {
        let term = fact(m - k - 1) / fact(k) * &qk;
        if k % 2 == 0 {
            first += term;
        } else {
            first -= term;
        }
        qk *= &q;
    }
    first *= Float::with_val(p, half.clone().pow(-(m as i32))) / 2u32;
    let mut i_m = Float::with_val(p, 0);
    let mut second = Float::with_val(p, 0);
    let mut qk = Float::with_val(p, 1);
    for k in 0..400u32 {
        let w = Float::with_val(p, &qk / (fact(k) * fact(m + k)));
        i_m += &w;
        second += Float::with_val(p, &w * (psi(k + 1) + psi(m + k + 1)));
        qk *= &q;
        if w.is_zero() || w.clone().abs() < Float::with_val(p, 1e-200) {
            break;
        }
    }
    let hm = Float::with_val(p, half.clone().pow(m));
    i_m *= &hm;
    second *= &hm;
    second /= 2u32;
    let lnh = Float::with_val(p, half.ln_ref());
    let sgn = if m % 2 == 0 { 1 } else { -1 };
    // K_m = first + (−1)^{m+1} ln(x/2) I_m + (−1)^m · second
    let mut k = first;
    k += Float::with_val(p, &lnh * &i_m) * (-sgn);
    k += second * sgn;
    Float::with_val(x.prec() - 64, k)
}

fn rel(a: &Float, b: &Float) -> f64 {
    (Float::with_val(P, a - b).abs() / Float::with_val(P, b.abs_ref())).to_f64()
}

#[test]
fn bessel_k2_at_two() {
    // 2 K_2(2) = 0.50751...
    let v = bessel_k(&Float::with_val(P, 2), &Float::with_val(P, 2), P).unwrap() * 2u32;
    assert!((v.to_f64() - 0.507519).abs() < 1e-6);
}

#[test]
fn bessel_k_matches_series() {
    for (m, x) in [(0u32, 0.7), (1, 2.0), (3, 1.3), (5, 4.0), (9, 8.0)] {
        let xf = Float::with_val(P, x);
        let a = bessel_k(&Float::with_val(P, m), &xf, P).unwrap();
        let b = bessel_k_series(m, &xf);
        assert!(rel(&a, &b) < 1e-60, "K_{m}({x}): {}", rel(&a, &b));
    }
}

#[test]
fn bessel_k_recurrence() {
    // K_{ν+1} = K_{ν−1} + (2ν/x) K_ν
    let x = Float::with_val(P, 3.25);
    for nu in 1..8 {
        let k = |v: i32| bessel_k(&Float::with_val(P, v), &x, P).unwrap();
        let rhs = k(nu - 1) + Float::with_val(P, k(nu) * (2 * nu)) / &x;
        assert!(rel(&k(nu + 1), &rhs) < 1e-60);
    }
}

#[test]
fn contour_moments_match_bessel_form() {
    for (n, t) in [(1u32, 0.5), (2, 1.0), (4, 0.5)] {
        let w = WeightParams::new(n, t, 0.5, P);
        let tab = moment_table(&w, 0, 6, &QuadratureSpec::new(P)).unwrap();
        for j in 0..=6 {
            let nu = j as u32 + n + 1;
            let x = Float::with_val(P, t).sqrt() * (2 * n);
            let tp = Float::with_val(P, t).pow(Float::with_val(P, nu) / 2u32);
            let oracle = bessel_k_series(nu, &x) * tp * 2u32;
            let got = tab.get(j);
            assert!(rel(got.real(), &oracle) < 1e-50, "n={n} t={t} j={j}");
            assert!(got.imag().clone().abs() < Float::with_val(P, 1e-50) * &oracle);
        }
    }
}

#[test]
fn moments_do_not_depend_on_delta() {
    for t in [0.3, -0.04] {
        let a = moment_table(&WeightParams::new(2, t, 0.5, P).with_delta(0.03), -1, 5, &QuadratureSpec::new(P)).unwrap();
        let b = moment_table(&WeightParams::new(2, t, 0.5, P).with_delta(0.0381), -1, 5, &QuadratureSpec::new(P)).unwrap();
        for j in -1..=5 {
            let d = abs(&Complex::with_val(P, a.get(j) - b.get(j)));
            let tol = Float::with_val(P, a.err(j) + b.err(j)) + Float::with_val(P, abs(a.get(j)) * 1e-60);
            assert!(d <= tol, "t={t} j={j}: {}", d.to_f64());
        }
    }
}

#[test]
fn moments_are_real_at_half_alpha() {
    // α = 1/2 weighs the two halves of the circle symmetrically
    let w = WeightParams::new(3, -0.04, 0.5, P);
    let tab = moment_table(&w, 0, 6, &QuadratureSpec::new(P)).unwrap();
    for j in 0..=6 {
        let v = tab.get(j);
        assert!(Float::with_val(P, v.imag().abs_ref()) < Float::with_val(P, abs(v) * 1e-60), "j={j}");
    }
}

#[test]
fn weight_rejects_the_cut() {
    let w = WeightParams::new(2, 0.1, 0.5, P);
    let z = Complex::with_val(P, (-1, 0));
    assert!(matches!(eval_weight(&z, 1, &w), Err(Error::BranchCut(_))));
    assert!(matches!(eval_weight(&Complex::new(P), 1, &w), Err(Error::BranchCut(_))));
    assert!(matches!(eval_weight(&Complex::with_val(P, (1, 0)), 4, &w), Err(Error::Domain(_))));
}

#[test]
fn weight_branch_constants() {
    let w = WeightParams::new(2, 0.1, 0.25, P);
    let z = Complex::with_val(P, (0.5, 0.2));
    let w1 = eval_weight(&z, 1, &w).unwrap();
    let w2 = eval_weight(&z, 2, &w).unwrap();
    let w3 = eval_weight(&z, 3, &w).unwrap();
    let sum = Complex::with_val(P, &w2 + &w3);
    assert!(abs(&Complex::with_val(P, &sum - &w1)).to_f64() < 1e-70);
    assert!(abs(&Complex::with_val(P, &w2 - Complex::with_val(P, &w1 * 0.25f64))).to_f64() < 1e-70);
}

#[test]
fn near_contour_detects_the_swept_region() {
    let w = WeightParams::new(2, -0.04, 0.5, P);
    let d = w.delta.to_f64();
    assert!(near_contour(&w, &Complex::with_val(P, (3.0, 0))));
    assert!(near_contour(&w, &Complex::with_val(P, (d * 0.5, d * 0.5))));
    assert!(!near_contour(&w, &Complex::with_val(P, (1.0, 0.5))));
    assert!(!near_contour(&w, &Complex::with_val(P, (-1.0, 0))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cutoff_grows_with_power(n in 1u32..8, t in -0.05f64..1.0, j in 0i64..20) {
        let w = WeightParams::new(n, t, 0.5, 128);
        let tol = Float::with_val(128, 1e-40);
        let a = ray_cutoff(&w, j, &tol);
        let b = ray_cutoff(&w, j + 4, &tol);
        prop_assert!(b >= a);
    }

    #[test]
    fn exponential_factor_has_constant_modulus_on_the_circle(theta in 0.01f64..3.13, t in -0.08f64..-0.001) {
        // |e^{-nt/z}| on |z − δ| = δ is e^{-nt/(2δ)}
        let w = WeightParams::new(3, t, 0.5, 128);
        let d = w.delta.to_f64();
        let z = Complex::with_val(128, (d + d * theta.cos(), d * theta.sin()));
        let e = Complex::with_val(128, Complex::with_val(128, &w.t / &z) * -3i32).exp();
        let expect = (-3.0 * t / (2.0 * d)).exp();
        prop_assert!((abs(&e).to_f64() / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn potential_real_part_is_conjugation_symmetric(x in 0.1f64..5.0, y in 0.01f64..3.0, t in -0.1f64..0.5) {
        let tf = Float::with_val(128, t);
        let z = Complex::with_val(128, (x, y));
        let zc = Complex::with_val(128, (x, -y));
        let a = potential(&z, &tf);
        let b = potential(&zc, &tf);
        prop_assert!((Float::with_val(128, a.real() - b.real())).abs().to_f64() < 1e-30);
        prop_assert!((Float::with_val(128, a.imag() + b.imag())).abs().to_f64() < 1e-30);
    }
}
