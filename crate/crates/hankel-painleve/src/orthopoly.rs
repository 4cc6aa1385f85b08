//! Hankel determinants, monic orthogonal polynomials and their recurrence
//! data, the boundary values Y(0) and Y₋₁, the differential identities tying
//! them to H_k = t d/dt log D_k, and the MGF ratio.

use crate::error::{Error, Result};
use crate::numkernel::linalg::{lu_complex, ComplexLu};
use crate::numkernel::{
    abs, certify, cplx_of, finite_diff, finite_diff_orders, pi, two_pi_i, Agree, Certificate, DiffEstimate,
    QuadratureSpec, StepPolicy,
};
use crate::weight::{moment_table, MomentTable, WeightParams};
use rug::{Complex, Float};

/// a − b with the imaginary part reduced to (−π, π]: the branch-free
/// difference of two logarithms.
pub fn log_diff(a: &Complex, b: &Complex) -> Complex {
    let p = a.prec().0;
    let mut d = Complex::with_val(p, a - b);
    let pi = pi(p);
    let two_pi = Float::with_val(p, &pi * 2u32);
    let im = d.imag().clone();
    if im > pi || im <= -pi.clone() {
        let k = Float::with_val(p, (Float::with_val(p, &im + &pi) / &two_pi).floor());
        let shift = Float::with_val(p, &k * &two_pi);
        *d.mut_imag() -= shift;
    }
    d
}

#[derive(Clone, Debug)]
pub struct HankelData {
    pub k: usize,
    pub log_det: Complex,
    pub certificate: Option<Certificate>,
}

impl HankelData {
    pub fn det(&self) -> Complex {
        self.log_det.clone().exp()
    }
}

fn hankel_matrix(k: usize, moments: &MomentTable) -> Result<Vec<Vec<Complex>>> {
    if moments.jmin > 0 || moments.jmax() < 2 * k as i64 - 2 {
        return Err(Error::Domain(format!("moment table does not cover μ_0..μ_{}", 2 * k as i64 - 2)));
    }
    Ok((0..k).map(|i| (0..k).map(|j| moments.get((i + j) as i64).clone()).collect()).collect())
}

fn factor(k: usize, moments: &MomentTable) -> Result<Option<ComplexLu>> {
    if k == 0 {
        return Ok(None);
    }
    lu_complex(hankel_matrix(k, moments)?).map(Some).map_err(|e| match e {
        Error::Singular { digits, .. } => Error::Singular { k, digits },
        e => e,
    })
}

/// log det(μ_{i+j})_{i,j<k}; the branch is whatever the pivots give.
pub fn hankel_logdet(k: usize, moments: &MomentTable) -> Result<HankelData> {
    let p = moments.prec();
    let log_det = match factor(k, moments)? {
        Some(lu) => lu.log_det_raw(),
        None => Complex::new(p),
    };
    Ok(HankelData { k, log_det, certificate: None })
}

/// Log-determinant with fresh moment tables at doubling precision until
/// `digits` decimal digits agree (compared modulo 2πi).
pub fn hankel_logdet_certified(k: usize, params: &WeightParams, digits: f64, prec0: u32, cap: u32) -> Result<HankelData> {
    struct ModLog(Complex);
    impl Agree for ModLog {
        fn agreement(&self, other: &Self) -> f64 {
            let d = log_diff(&self.0, &Complex::with_val(self.0.prec().0, &other.0));
            let scale = abs(&self.0).to_f64().max(1.0);
            let e = abs(&d).to_f64() / scale;
            if e == 0.0 { f64::INFINITY } else { -e.log10() }
        }
    }
    let (v, cert) = certify(
        |p| {
            let tab = moment_table(&params.at_prec(p), 0, 2 * k as i64, &QuadratureSpec::new(p))?;
            Ok(ModLog(hankel_logdet(k, &tab)?.log_det))
        },
        digits,
        prec0,
        cap,
    )
    .map_err(|e| match e {
        Error::PrecisionCap { digits, .. } => Error::Singular { k, digits },
        e => e,
    })?;
    Ok(HankelData { k, log_det: v.0, certificate: Some(cert) })
}

/// Monic polynomial, coefficients in ascending order (last is 1).
#[derive(Clone, Debug, PartialEq)]
pub struct MonicPoly {
    pub coeffs: Vec<Complex>,
}

impl MonicPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: &Complex) -> Complex {
        let p = z.prec().0;
        let mut acc = Complex::new(p);
        for c in self.coeffs.iter().rev() {
            acc *= z;
            acc += c;
        }
        acc
    }

    /// Σ c_i μ_{i+shift}: the contour integral of π(z) z^shift w(z).
    pub fn pair(&self, moments: &MomentTable, shift: i64) -> Result<Complex> {
        let p = moments.prec();
        let lo = shift;
        let hi = shift + self.degree() as i64;
        if lo < moments.jmin || hi > moments.jmax() {
            return Err(Error::Domain(format!("moments μ_{lo}..μ_{hi} not in the table")));
        }
        let mut s = Complex::new(p);
        for (i, c) in self.coeffs.iter().enumerate() {
            s += Complex::with_val(p, c * moments.get(i as i64 + shift));
        }
        Ok(s)
    }
}

/// π_k from H_k c = −(μ_k, …, μ_{2k−1}).
fn monic_from(k: usize, lu: Option<&ComplexLu>, moments: &MomentTable) -> MonicPoly {
    let p = moments.prec();
    let mut coeffs = match lu {
        None => vec![],
        Some(lu) => {
            let rhs: Vec<Complex> = (0..k).map(|i| -moments.get((k + i) as i64).clone()).collect();
            lu.solve(&rhs)
        }
    };
    coeffs.push(Complex::with_val(p, 1));
    MonicPoly { coeffs }
}

#[derive(Clone, Debug)]
pub struct RecurrenceEntry {
    pub k: usize,
    pub gamma2: Complex,
    pub p: Complex,
    pub alpha: Complex,
    /// undefined at k = 0
    pub beta: Option<Complex>,
    pub a: Complex,
}

#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    pub n: u32,
    pub t: Float,
    pub kmin: usize,
    pub entries: Vec<RecurrenceEntry>,
    /// log D_j for j = kmin−1 (or 0) ..= kmax+1
    pub log_dets: Vec<(usize, Complex)>,
    /// π_j for the same range of j
    pub polys: Vec<MonicPoly>,
}

impl RecurrenceTable {
    pub fn entry(&self, k: usize) -> Result<&RecurrenceEntry> {
        self.entries
            .iter()
            .find(|e| e.k == k)
            .ok_or_else(|| Error::Domain(format!("k = {k} not in the recurrence table")))
    }

    pub fn poly(&self, k: usize) -> Result<&MonicPoly> {
        let j0 = self.log_dets[0].0;
        self.polys.get(k.wrapping_sub(j0)).ok_or_else(|| Error::Domain(format!("π_{k} not in the recurrence table")))
    }

    pub fn log_det(&self, k: usize) -> Result<&Complex> {
        self.log_dets
            .iter()
            .find(|(j, _)| *j == k)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Domain(format!("log D_{k} not in the recurrence table")))
    }

    pub fn kmax(&self) -> usize {
        self.kmin + self.entries.len() - 1
    }
}

/// Recurrence data for k in kmin..=kmax. Needs μ_0..μ_{2kmax+1}.
pub fn recurrence_range(kmin: usize, kmax: usize, moments: &MomentTable) -> Result<RecurrenceTable> {
    if kmax < kmin {
        return Err(Error::Domain("empty k range".into()));
    }
    let p = moments.prec();
    let n = moments.params.n;
    let j0 = kmin.saturating_sub(1);
    let mut log_dets = vec![];
    let mut polys = vec![];
    for j in j0..=kmax + 1 {
        let lu = factor(j, moments)?;
        log_dets.push((j, lu.as_ref().map(|l| l.log_det_raw()).unwrap_or_else(|| Complex::new(p))));
        if j as i64 * 2 - 1 > moments.jmax() {
            return Err(Error::Domain(format!("π_{j} needs μ up to {}", 2 * j - 1)));
        }
        polys.push(monic_from(j, lu.as_ref(), moments));
    }
    let ld = |j: usize| &log_dets[j - j0].1;
    let sub = |j: usize| -> Complex {
        if j == 0 {
            Complex::new(p)
        } else {
            polys[j - j0].coeffs[j - 1].clone()
        }
    };
    let mut entries = vec![];
    for k in kmin..=kmax {
        let gamma2 = log_diff(ld(k), ld(k + 1)).exp();
        let beta = if k == 0 {
            None
        } else {
            let l = Complex::with_val(p, log_diff(ld(k + 1), ld(k)) - log_diff(ld(k), ld(k - 1)));
            Some(l.exp())
        };
        let pk = sub(k);
        let alpha = Complex::with_val(p, &pk - sub(k + 1));
        let shift = Float::with_val(p, (2 * k + 1) as u32 + n) / n;
        let a = Complex::with_val(p, &alpha - shift);
        entries.push(RecurrenceEntry { k, gamma2, p: pk, alpha, beta, a });
    }
    Ok(RecurrenceTable { n, t: moments.params.t.clone(), kmin, entries, log_dets, polys })
}

/// Recurrence data for k = 0..=K.
pub fn recurrence_table(kk: usize, moments: &MomentTable) -> Result<RecurrenceTable> {
    recurrence_range(0, kk, moments)
}

#[derive(Clone, Debug)]
pub struct YBoundaryData {
    pub k: usize,
    pub y11: Complex,
    pub y12: Complex,
    pub y21: Complex,
    pub y22: Complex,
    pub yminus1_12: Complex,
    pub yminus1_21: Complex,
    pub c_kn: Complex,
    pub q_kn: Complex,
}

impl YBoundaryData {
    pub fn det(&self) -> Complex {
        let p = self.y11.prec().0;
        Complex::with_val(p, &self.y11 * &self.y22) - Complex::with_val(p, &self.y12 * &self.y21)
    }

    /// γ_k² by the Y₋₁ route.
    pub fn gamma2(&self) -> Complex {
        let p = self.y11.prec().0;
        -(Complex::with_val(p, 1) / (two_pi_i(p) * &self.yminus1_12))
    }
}

/// Y(0) and Y₋₁ for degree k ≥ 1 from a recurrence table covering k−1 and k
/// and a moment table that includes μ_{−1}.
pub fn y_boundary(k: usize, rec: &RecurrenceTable, moments: &MomentTable) -> Result<YBoundaryData> {
    if k == 0 {
        return Err(Error::Domain("Y needs k ≥ 1 (γ_{k−1})".into()));
    }
    let p = moments.prec();
    let tpi = two_pi_i(p);
    let pk = rec.poly(k)?;
    let pk1 = rec.poly(k - 1)?;
    let g2 = log_diff(rec.log_det(k - 1)?, rec.log_det(k)?).exp();
    let zero = Complex::new(p);
    let y11 = pk.eval(&zero);
    let y12 = pk.pair(moments, -1)? / &tpi;
    let y21 = -(Complex::with_val(p, &tpi * &g2) * pk1.eval(&zero));
    let y22 = -(Complex::with_val(p, &g2 * pk1.pair(moments, -1)?));
    let yminus1_12 = -(pk.pair(moments, k as i64)? / &tpi);
    let yminus1_21 = -(Complex::with_val(p, &tpi * &g2));
    let c_kn = Complex::with_val(p, &y11 * &y12);
    if y11.is_zero() {
        return Err(Error::DivisionNearZero(format!("π_{k}(0) = 0")));
    }
    let q_kn = -(Complex::with_val(p, &y21 / &y11));
    Ok(YBoundaryData { k, y11, y12, y21, y22, yminus1_12, yminus1_21, c_kn, q_kn })
}

/// Moments μ_{−1}..μ_{2k+1}: enough for recurrence data and Y at degree k.
pub fn moments_for(k: usize, params: &WeightParams, spec: &QuadratureSpec) -> Result<MomentTable> {
    moment_table(params, -1, 2 * k as i64 + 1, spec)
}

#[derive(Clone, Debug)]
pub struct HankelDerivatives {
    pub k: usize,
    /// t d/dt log D_k
    pub h: DiffEstimate,
    /// d/dt H_k
    pub dh: DiffEstimate,
}

/// H_k and H_k′ by central differences in t over fresh moment tables.
pub fn hankel_derivatives(k: usize, params: &WeightParams, spec: &QuadratureSpec, policy: &StepPolicy) -> Result<HankelDerivatives> {
    let p = spec.prec;
    let base = moment_table(params, 0, 2 * k as i64, spec)?;
    let l0 = hankel_logdet(k, &base)?.log_det;
    let t = cplx_of(&params.t);
    let (d1, d2) = finite_diff_orders(
        |tau| {
            if tau == &t {
                return Ok(Complex::new(p));
            }
            let tab = moment_table(&params.with_t(tau.real()), 0, 2 * k as i64, spec)?;
            Ok(log_diff(&hankel_logdet(k, &tab)?.log_det, &l0))
        },
        &t,
        policy,
    )?;
    // H = t L′, H′ = L′ + t L″
    let h = DiffEstimate { value: Complex::with_val(p, &d1.value * &t), err: Float::with_val(p, &d1.err * abs(&t)) };
    let dh = DiffEstimate {
        value: Complex::with_val(p, &d1.value + Complex::with_val(p, &d2.value * &t)),
        err: Float::with_val(p, &d1.err + Float::with_val(p, &d2.err * abs(&t))),
    };
    Ok(HankelDerivatives { k, h, dh })
}

/// |x − y| / (1 + |y|)
pub fn rel_residual(x: &Complex, y: &Complex) -> Float {
    let p = x.prec().0;
    abs(&Complex::with_val(p, x - y)) / (abs(y) + 1u32)
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub k: usize,
    pub n: u32,
    pub t: Float,
    /// a_k against 2πi t γ_k² Y11(0) Y12(0)
    pub a_y: Float,
    /// H′ against −n² Y12(0) Y21(0)
    pub dh_y: Float,
    /// n² β_k against k(k+n) + t H′ − H
    pub beta_h: Float,
    /// H against −n Σ_{j<k} a_j
    pub h_sum_a: Float,
    /// dp_k/dt by differences against n γ_{k−1}² ∫ π_k π_{k−1} w/z
    pub dp_cross: Float,
    pub gamma2_routes: Float,
    pub det_y: Float,
    pub derivatives: HankelDerivatives,
}

impl IdentityReport {
    pub fn worst(&self) -> Float {
        [&self.a_y, &self.dh_y, &self.beta_h, &self.h_sum_a]
            .into_iter()
            .fold(Float::with_val(self.t.prec(), 0), |m, x| if *x > m { x.clone() } else { m })
    }
}

/// ∫ π_a π_b w / z dz via the coefficient convolution against μ_{−1..}.
fn pair_over_z(pa: &MonicPoly, pb: &MonicPoly, moments: &MomentTable) -> Result<Complex> {
    let p = moments.prec();
    let mut prod = vec![Complex::new(p); pa.coeffs.len() + pb.coeffs.len() - 1];
    for (i, x) in pa.coeffs.iter().enumerate() {
        for (j, y) in pb.coeffs.iter().enumerate() {
            prod[i + j] += Complex::with_val(p, x * y);
        }
    }
    let mut s = Complex::new(p);
    for (i, c) in prod.iter().enumerate() {
        let j = i as i64 - 1;
        if j > moments.jmax() {
            return Err(Error::Domain(format!("μ_{j} not in the table")));
        }
        s += Complex::with_val(p, c * moments.get(j));
    }
    Ok(s)
}

/// All four differential identities at (k, n, t), plus two cross-checks.
pub fn identity_suite(k: usize, params: &WeightParams, spec: &QuadratureSpec, policy: &StepPolicy) -> Result<IdentityReport> {
    if k == 0 {
        return Err(Error::Domain("identity suite needs k ≥ 1".into()));
    }
    if params.t.is_zero() {
        return Err(Error::Domain("identity suite needs t ≠ 0".into()));
    }
    let p = spec.prec;
    let n = params.n;
    let nf = Float::with_val(p, n);
    let t = cplx_of(&params.t);
    let moments = moments_for(k, params, spec)?;
    let rec = recurrence_table(k, &moments)?;
    let y = y_boundary(k, &rec, &moments)?;
    let der = hankel_derivatives(k, params, spec, policy)?;
    let e = rec.entry(k)?;

    let a_y_rhs = two_pi_i(p) * &t * &e.gamma2 * &y.y11 * &y.y12;
    let a_y = rel_residual(&e.a, &a_y_rhs);

    let n2 = Float::with_val(p, nf.square_ref());
    let dh_rhs = -(Complex::with_val(p, &y.y12 * &y.y21) * &n2);
    let dh_y = rel_residual(&der.dh.value, &dh_rhs);

    let beta = e.beta.clone().ok_or_else(|| Error::Domain("β_0 undefined".into()))?;
    let lhs = Complex::with_val(p, &beta * &n2);
    let kk = Float::with_val(p, (k as u32) * (k as u32 + n));
    let rhs = Complex::with_val(p, &t * &der.dh.value) - &der.h.value + kk;
    let beta_h = rel_residual(&lhs, &rhs);

    let mut sum_a = Complex::new(p);
    for j in 0..k {
        sum_a += &rec.entry(j)?.a;
    }
    let h_sum_a = rel_residual(&der.h.value, &(-(sum_a * &nf)));

    // dp_k/dt = n γ_{k−1}² ∫ π_k π_{k−1} w/z, the analytic route
    let g2 = &rec.entry(k - 1)?.gamma2;
    let dp_rhs = Complex::with_val(p, g2 * pair_over_z(rec.poly(k)?, rec.poly(k - 1)?, &moments)?) * &nf;
    let base_tab = moment_table(params, 0, 2 * k as i64 - 1, spec)?;
    let p0 = monic_from(k, factor(k, &base_tab)?.as_ref(), &base_tab).coeffs[k - 1].clone();
    let dp = finite_diff(
        |tau| {
            if tau == &t {
                return Ok(p0.clone());
            }
            let tab = moment_table(&params.with_t(tau.real()), 0, 2 * k as i64 - 1, spec)?;
            Ok(monic_from(k, factor(k, &tab)?.as_ref(), &tab).coeffs[k - 1].clone())
        },
        &t,
        1,
        policy,
    )?;
    let dp_cross = rel_residual(&dp.value, &dp_rhs);

    let gamma2_routes = rel_residual(&y.gamma2(), &e.gamma2);
    let det_y = rel_residual(&y.det(), &Complex::with_val(p, 1));
    Ok(IdentityReport {
        k,
        n,
        t: params.t.clone(),
        a_y,
        dh_y,
        beta_h,
        h_sum_a,
        dp_cross,
        gamma2_routes,
        det_y,
        derivatives: der,
    })
}

/// M_n = D_n[w; t] / D_n[w; 0].
pub fn mgf(params: &WeightParams, spec: &QuadratureSpec) -> Result<Complex> {
    let n = params.n as usize;
    let p = spec.prec;
    let at = moment_table(params, 0, 2 * n as i64 - 2, spec)?;
    let at0 = moment_table(&params.with_t(&Float::with_val(p, 0)), 0, 2 * n as i64 - 2, spec)?;
    let l = hankel_logdet(n, &at)?.log_det;
    let l0 = hankel_logdet(n, &at0)?.log_det;
    Ok(log_diff(&l, &l0).exp())
}

/// max_{j<k} |∫ π_k z^j w| · γ_k²: orthogonality residual.
pub fn orthogonality_residual(k: usize, rec: &RecurrenceTable, moments: &MomentTable) -> Result<Float> {
    let p = moments.prec();
    let pk = rec.poly(k)?;
    let g2 = abs(&rec.entry(k)?.gamma2);
    let mut worst = Float::with_val(p, 0);
    for j in 0..k as i64 {
        let v = abs(&pk.pair(moments, j)?) * &g2;
        if v > worst {
            worst = v;
        }
    }
    Ok(worst)
}

/// Largest coefficient of z π_k − π_{k+1} − α_k π_k − β_k π_{k−1}.
pub fn three_term_residual(k: usize, rec: &RecurrenceTable) -> Result<Float> {
    let e = rec.entry(k)?;
    let pk = rec.poly(k)?;
    let pk1 = rec.poly(k + 1)?;
    let p = e.alpha.prec().0;
    let mut r: Vec<Complex> = vec![Complex::new(p); k + 2];
    for (i, c) in pk.coeffs.iter().enumerate() {
        r[i + 1] += c;
        r[i] -= Complex::with_val(p, c * &e.alpha);
    }
    for (i, c) in pk1.coeffs.iter().enumerate() {
        r[i] -= c;
    }
    if k > 0 {
        let b = e.beta.as_ref().unwrap();
        for (i, c) in rec.poly(k - 1)?.coeffs.iter().enumerate() {
            r[i] -= Complex::with_val(p, c * b);
        }
    }
    Ok(r.iter().map(abs).fold(Float::with_val(p, 0), |m, x| if x > m { x } else { m }))
}

/// Y(z) = [[π_k, C(π_k w)], [−2πiγ_{k−1}²π_{k−1}, −2πiγ_{k−1}² C(π_{k−1} w)]]
/// with C the Cauchy transform, for z away from the contour.
pub fn y_matrix(z: &Complex, k: usize, rec: &RecurrenceTable, params: &WeightParams, spec: &QuadratureSpec) -> Result<[[Complex; 2]; 2]> {
    if k == 0 {
        return Err(Error::Domain("Y needs k ≥ 1".into()));
    }
    if crate::weight::near_contour(params, z) {
        return Err(Error::Domain(format!("z = {} is too close to the contour", z.to_string_radix(10, Some(8)))));
    }
    let p = spec.prec;
    let tpi = two_pi_i(p);
    let pk = rec.poly(k)?.clone();
    let pk1 = rec.poly(k - 1)?.clone();
    let g2 = log_diff(rec.log_det(k - 1)?, rec.log_det(k)?).exp();
    let zz = z.clone();
    let ints = crate::weight::contour_integral_vec(
        params,
        k as i64,
        |s| {
            let inv = Complex::with_val(p, 1) / Complex::with_val(p, s - &zz);
            vec![pk.eval(s) * &inv, pk1.eval(s) * inv]
        },
        spec,
    )?;
    let y11 = pk.eval(z);
    let y12 = Complex::with_val(p, &ints[0] / &tpi);
    let y21 = -(Complex::with_val(p, &tpi * &g2) * pk1.eval(z));
    let y22 = -(Complex::with_val(p, &g2 * &ints[1]));
    Ok([[y11, y12], [y21, y22]])
}
