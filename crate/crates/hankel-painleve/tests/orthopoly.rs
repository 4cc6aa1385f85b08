use hankel_painleve::numkernel::{abs, pi, QuadratureSpec, StepPolicy};
use hankel_painleve::orthopoly::*;
use hankel_painleve::weight::*;
use hankel_painleve::Error;
use proptest::prelude::*;
use rug::{Complex, Float};

const P: u32 = 256;

fn table_from(values: Vec<Complex>, n: u32) -> MomentTable {
    let params = WeightParams::new(n, 0.0, 0.5, P);
    let entries = values
        .into_iter()
        .enumerate()
        .map(|(j, value)| MomentEntry { j: j as i64, value, err: Float::with_val(P, 0) })
        .collect();
    MomentTable { params, jmin: 0, entries, cutoff: Float::with_val(P, 0) }
}

fn d(a: &Complex, b: &Complex) -> f64 {
    abs(&Complex::with_val(P, a - b)).to_f64()
}

fn c(re: f64, im: f64) -> Complex {
    Complex::with_val(P, (re, im))
}

#[test]
fn log_diff_reduces_into_principal_strip() {
    let two_pi = Float::with_val(P, pi(P) * 2u32);
    let a = Complex::with_val(P, (1.5, Float::with_val(P, &two_pi * 3u32) + 0.25));
    let b = c(0.5, 0.0);
    let r = log_diff(&a, &b);
    assert!(d(&r, &c(1.0, 0.25)) < 1e-60);
    let r = log_diff(&b, &a);
    assert!(d(&r, &c(-1.0, -0.25)) < 1e-60);
}

#[test]
fn scaled_laguerre_recurrence_at_t_zero() {
    // z^n e^{-nz} on (0, ∞): α_k = (2k+1+n)/n, β_k = k(k+n)/n², so a_k = 0
    let n = 3u32;
    let w = WeightParams::new(n, 0.0, 0.5, P);
    let tab = moment_table(&w, 0, 13, &QuadratureSpec::new(P)).unwrap();
    let rec = recurrence_table(6, &tab).unwrap();
    let nf = f64::from(n);
    for k in 0..=6usize {
        let e = rec.entry(k).unwrap();
        let kf = k as f64;
        let alpha = Float::with_val(P, 2.0 * kf + 1.0 + nf) / n;
        assert!(d(&e.alpha, &Complex::with_val(P, alpha)) < 1e-50, "α_{k}");
        assert!(abs(&e.a).to_f64() < 1e-50);
        if k > 0 {
            let b = e.beta.as_ref().unwrap();
            let beta = Float::with_val(P, kf * (kf + nf)) / (n * n);
            assert!(d(b, &Complex::with_val(P, beta)) < 1e-50, "β_{k}");
        } else {
            assert!(e.beta.is_none());
        }
    }
    let g0 = &rec.entry(0).unwrap().gamma2;
    assert!(d(&Complex::with_val(P, g0 * tab.get(0)), &c(1.0, 0.0)) < 1e-60);
    let a0 = Complex::with_val(P, tab.get(1) / tab.get(0));
    assert!(d(&rec.entry(0).unwrap().alpha, &a0) < 1e-60);
}

#[test]
fn singular_moment_matrix_is_reported() {
    let tab = table_from(vec![c(1.0, 0.0); 6], 1);
    assert!(hankel_logdet(1, &tab).is_ok());
    assert!(matches!(hankel_logdet(2, &tab), Err(Error::Singular { .. })));
}

#[test]
fn orthogonality_and_three_term_recurrence_for_complex_weight() {
    let w = WeightParams::new(2, -0.04, 0.5, 384);
    let spec = QuadratureSpec::new(384);
    let tab = moment_table(&w, 0, 11, &spec).unwrap();
    let rec = recurrence_table(5, &tab).unwrap();
    for k in 1..5 {
        assert!(orthogonality_residual(k, &rec, &tab).unwrap().to_f64() < 1e-60, "k={k}");
        assert!(three_term_residual(k, &rec).unwrap().to_f64() < 1e-60, "k={k}");
    }
}

#[test]
fn y_boundary_routes_agree() {
    let w = WeightParams::new(3, 0.1, 0.5, 384);
    let spec = QuadratureSpec::new(384);
    let tab = moments_for(2, &w, &spec).unwrap();
    let rec = recurrence_table(2, &tab).unwrap();
    let y = y_boundary(2, &rec, &tab).unwrap();
    assert!(d(&y.det(), &Complex::with_val(384, 1)) < 1e-80);
    assert!(d(&y.gamma2(), &rec.entry(2).unwrap().gamma2) < 1e-80);
    assert!(matches!(y_boundary(0, &rec, &tab), Err(Error::Domain(_))));
}

#[test]
fn y_matrix_has_unit_determinant_off_the_contour() {
    let p = 320;
    let w = WeightParams::new(2, 0.1, 0.5, p);
    let spec = QuadratureSpec::new(p);
    let tab = moment_table(&w, 0, 5, &spec).unwrap();
    let rec = recurrence_table(2, &tab).unwrap();
    let z = Complex::with_val(p, (1.0, 0.7));
    let y = y_matrix(&z, 2, &rec, &w, &spec).unwrap();
    let det = Complex::with_val(p, &y[0][0] * &y[1][1]) - Complex::with_val(p, &y[0][1] * &y[1][0]);
    assert!(abs(&(det - 1u32)).to_f64() < 1e-40);
    let pz = rec.poly(2).unwrap().eval(&z);
    assert!(abs(&Complex::with_val(p, &y[0][0] - &pz)).to_f64() < 1e-70);
    let on = Complex::with_val(p, (3.0, 0));
    assert!(matches!(y_matrix(&on, 2, &rec, &w, &spec), Err(Error::Domain(_))));
}

#[test]
fn identity_suite_small_case() {
    let p = 384;
    let w = WeightParams::new(2, 0.1, 0.5, p);
    let r = identity_suite(1, &w, &QuadratureSpec::new(p), &StepPolicy::for_precision(p)).unwrap();
    assert!(r.worst().to_f64() < 1e-30, "{:?}", r.worst());
}

#[test]
fn mgf_is_one_at_t_zero_and_a_determinant_ratio() {
    let w = WeightParams::new(3, 0.0, 0.5, P);
    let m = mgf(&w, &QuadratureSpec::new(P)).unwrap();
    assert!(d(&m, &c(1.0, 0.0)) < 1e-60);
    let w = WeightParams::new(3, 0.2, 0.5, P);
    let spec = QuadratureSpec::new(P);
    let m = mgf(&w, &spec).unwrap();
    let at = moment_table(&w, 0, 4, &spec).unwrap();
    let at0 = moment_table(&w.with_t(&Float::with_val(P, 0)), 0, 4, &spec).unwrap();
    let ratio = Complex::with_val(P, hankel_logdet(3, &at).unwrap().det() / hankel_logdet(3, &at0).unwrap().det());
    assert!(abs(&(Complex::with_val(P, &m - &ratio) / &ratio)).to_f64() < 1e-60);
    // e^{-n t/z} < 1 on the positive axis for t > 0
    assert!(m.real().to_f64() < 1.0 && m.real().to_f64() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn two_by_two_determinant(v in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let mu: Vec<Complex> = v.chunks(2).map(|x| c(x[0], x[1])).collect();
        let expect = Complex::with_val(P, &mu[0] * &mu[2]) - Complex::with_val(P, mu[1].square_ref());
        prop_assume!(abs(&expect).to_f64() > 1e-3 && abs(&mu[0]).to_f64() > 1e-3);
        let tab = table_from(mu, 1);
        let h = hankel_logdet(2, &tab).unwrap();
        prop_assert!(abs(&(h.det() - &expect)).to_f64() < 1e-60 * (1.0 + abs(&expect).to_f64()));
    }

    #[test]
    fn three_by_three_determinant(v in proptest::collection::vec(-2.0f64..2.0, 10)) {
        let mu: Vec<Complex> = v.chunks(2).map(|x| c(x[0], x[1])).collect();
        let m = |i: usize, j: usize| mu[i + j].clone();
        let cof = |a: Complex, b: Complex, cc: Complex, dd: Complex| Complex::with_val(P, &a * &dd) - Complex::with_val(P, &b * &cc);
        let mut expect = Complex::with_val(P, &m(0, 0) * cof(m(1, 1), m(1, 2), m(2, 1), m(2, 2)));
        expect -= Complex::with_val(P, &m(0, 1) * cof(m(1, 0), m(1, 2), m(2, 0), m(2, 2)));
        expect += Complex::with_val(P, &m(0, 2) * cof(m(1, 0), m(1, 1), m(2, 0), m(2, 1)));
        prop_assume!(abs(&expect).to_f64() > 1e-3);
        let tab = table_from(mu, 1);
        match hankel_logdet(3, &tab) {
            Ok(h) => prop_assert!(abs(&(h.det() - &expect)).to_f64() < 1e-55 * (1.0 + abs(&expect).to_f64())),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn gamma_product_equals_inverse_determinant(t in -0.04f64..0.6) {
        // D_k = Π_{j<k} γ_j^{-2}
        let w = WeightParams::new(2, t, 0.5, P);
        let tab = moment_table(&w, 0, 9, &QuadratureSpec::new(P)).unwrap();
        let rec = recurrence_table(4, &tab).unwrap();
        let mut prod = Complex::with_val(P, 1);
        for k in 0..4 {
            prod /= &rec.entry(k).unwrap().gamma2;
        }
        let det = hankel_logdet(4, &tab).unwrap().det();
        prop_assert!(abs(&(Complex::with_val(P, &prod - &det) / &det)).to_f64() < 1e-50);
    }
}
