//! The weight w(z) = c_j e^{-n V_t(z)}, V_t(z) = z − log z + t/z, on the
//! contour made of the circle |z − δ| = δ (split into upper and lower halves)
//! and the ray (2δ, ∞); moments and the Bessel-K closed form for t > 0.

use crate::equilibrium::critical_constants;
use crate::error::{Error, Result};
use crate::numkernel::{abs, cplx_of, log10_float, pi, powi, quad_segment, quad_segment_vec, PathSegment, QuadratureSpec};
use rug::{Complex, Float};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightParams {
    pub n: u32,
    pub t: Float,
    pub alpha: Complex,
    pub delta: Float,
}

impl WeightParams {
    /// δ defaults to a_cr/2.
    pub fn new(n: u32, t: f64, alpha: f64, prec: u32) -> Self {
        let delta = critical_constants(prec).a_cr / 2u32;
        WeightParams { n, t: Float::with_val(prec, t), alpha: Complex::with_val(prec, (alpha, 0)), delta }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Float::with_val(self.delta.prec(), delta);
        self
    }

    pub fn with_t(&self, t: &Float) -> Self {
        let mut p = self.clone();
        p.t = t.clone();
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !(self.delta > 0) {
            return Err(Error::Domain("delta must be positive".into()));
        }
        Ok(())
    }

    /// Copy of the parameters at another precision.
    pub fn at_prec(&self, prec: u32) -> Self {
        WeightParams {
            n: self.n,
            t: Float::with_val(prec, &self.t),
            alpha: Complex::with_val(prec, &self.alpha),
            delta: Float::with_val(prec, &self.delta),
        }
    }

    pub fn prec(&self) -> u32 {
        self.t.prec()
    }

    /// c_1 = 1, c_2 = α, c_3 = 1 − α
    pub fn c(&self, branch: u8) -> Complex {
        let p = self.prec();
        match branch {
            2 => self.alpha.clone(),
            3 => Complex::with_val(p, 1) - &self.alpha,
            _ => Complex::with_val(p, 1),
        }
    }
}

/// V_t(z) with the principal logarithm.
pub fn potential(z: &Complex, t: &Float) -> Complex {
    let p = z.prec().0;
    let l = Complex::with_val(p, z.ln_ref());
    Complex::with_val(p, z - l) + Complex::with_val(p, t / z)
}

/// c_j e^{-n V_t(z)}; rejects z on (−∞, 0].
pub fn eval_weight(z: &Complex, branch: u8, params: &WeightParams) -> Result<Complex> {
    if z.imag().is_zero() && !z.real().is_sign_positive() || z.is_zero() {
        return Err(Error::BranchCut(z.clone()));
    }
    if !(1..=3).contains(&branch) {
        return Err(Error::Domain(format!("branch must be 1, 2 or 3, got {branch}")));
    }
    let p = z.prec().0;
    let v = potential(z, &params.t) * params.n;
    Ok(Complex::with_val(p, -v).exp() * params.c(branch))
}

/// The integration contour: the two semicircles (0 → 2δ) and the ray 2δ → R.
#[derive(Clone, Debug)]
pub struct Contour {
    pub upper: PathSegment,
    pub lower: PathSegment,
    pub ray: PathSegment,
    pub cutoff: Float,
}

/// Largest power of z the cutoff must cover is `jmax`; the discarded tail of
/// |z|^{jmax} e^{-n Re V_t} on (R, ∞) stays below `truncation_tol`.
pub fn ray_cutoff(params: &WeightParams, jmax: i64, truncation_tol: &Float) -> Float {
    let n = f64::from(params.n);
    let m = (jmax + i64::from(params.n)).max(0) as f64;
    let ln_tol = log10_float(truncation_tol) * std::f64::consts::LN_10;
    let tneg = (-params.t.to_f64()).max(0.0);
    let two_delta = 2.0 * params.delta.to_f64();
    // tail ≤ 2 R^m e^{-nR} e^{n|t|/R} / n once R ≥ 2(m+1)/n
    let bound = |r: f64| m * r.ln() - n * r + (2.0 / n).ln() + n * tneg / r;
    let mut lo = (2.0 * (m + 1.0) / n).max(two_delta * 2.0);
    if bound(lo) <= ln_tol {
        return Float::with_val(params.prec(), lo);
    }
    let mut hi = lo * 2.0;
    while bound(hi) > ln_tol {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > ln_tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // round up to a short binary fraction so R is exactly representable
    let r = (hi * 64.0).ceil() / 64.0;
    Float::with_val(params.prec(), r)
}

pub fn build_contour(params: &WeightParams, jmax: i64, truncation_tol: &Float) -> Result<Contour> {
    params.validate()?;
    let p = params.prec();
    let d = &params.delta;
    let center = cplx_of(d);
    let upper = PathSegment::arc(center.clone(), d.clone(), pi(p), Float::with_val(p, 0))?;
    let lower = PathSegment::arc(center, d.clone(), -pi(p), Float::with_val(p, 0))?;
    let r = ray_cutoff(params, jmax, truncation_tol);
    let ray = PathSegment::line(cplx_of(&Float::with_val(p, d * 2u32)), cplx_of(&r))?;
    Ok(Contour { upper, lower, ray, cutoff: r })
}

impl Contour {
    /// Pieces actually integrated in place of the two semicircles, with their
    /// coefficients. The integrand z^k e^{-n(z + t/z)} is single-valued, so
    /// any stretch shared by both halves carries c_2 + c_3 = 1.
    ///
    /// t ≥ 0: both halves collapse onto [0, 2δ], where e^{-nt/z} is flat at 0.
    /// t < 0: both leave 0 along [0, −δ] (flat there), then follow the circle
    /// through −δ and 2δ above or below the axis.
    pub fn quadrature_pieces(&self, params: &WeightParams) -> Result<Vec<(PathSegment, Complex)>> {
        let p = params.prec();
        let d = &params.delta;
        let two_d = Float::with_val(p, d * 2u32);
        let one = Complex::with_val(p, 1);
        if !params.t.is_sign_negative() || params.t.is_zero() {
            return Ok(vec![(PathSegment::line(Complex::new(p), cplx_of(&two_d))?, one)]);
        }
        let minus_d = Float::with_val(p, -d);
        let center = cplx_of(&(Float::with_val(p, d / 2u32)));
        let radius = Float::with_val(p, d * 3u32) / 2u32;
        Ok(vec![
            (PathSegment::line(Complex::new(p), cplx_of(&minus_d))?, one),
            (PathSegment::arc(center.clone(), radius.clone(), pi(p), Float::with_val(p, 0))?, params.c(2)),
            (PathSegment::arc(center, radius, -pi(p), Float::with_val(p, 0))?, params.c(3)),
        ])
    }

    pub fn pieces(&self) -> [(&PathSegment, u8); 3] {
        [(&self.upper, 2), (&self.lower, 3), (&self.ray, 1)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentEntry {
    pub j: i64,
    #[serde(skip)]
    pub value: Complex,
    #[serde(skip)]
    pub err: Float,
}

#[derive(Clone, Debug)]
pub struct MomentTable {
    pub params: WeightParams,
    pub jmin: i64,
    pub entries: Vec<MomentEntry>,
    pub cutoff: Float,
}

impl MomentTable {
    pub fn get(&self, j: i64) -> &Complex {
        &self.entries[(j - self.jmin) as usize].value
    }

    pub fn err(&self, j: i64) -> &Float {
        &self.entries[(j - self.jmin) as usize].err
    }

    pub fn jmax(&self) -> i64 {
        self.jmin + self.entries.len() as i64 - 1
    }

    pub fn prec(&self) -> u32 {
        self.params.prec()
    }
}

/// z^{j0} w(z)/c · (1, z, z², …): one exp and one log per node. For integer n
/// z^n is single-valued, so the log branch never matters.
fn powers_integrand(params: &WeightParams, j0: i64, count: usize) -> impl Fn(&Complex) -> Result<Vec<Complex>> + '_ {
    move |z: &Complex| {
        let p = z.prec().0;
        let n = params.n;
        let e = Complex::with_val(p, z + Complex::with_val(p, &params.t / z)) * n;
        let m = i64::from(n) + j0;
        // below the working floor even after the largest power: skip the exp,
        // whose argument reduction blows up as z → 0
        let r = abs(z).to_f64();
        let top = (m.max(0) as f64 + count as f64) * r.max(1.0).ln() - m.min(0) as f64 * (1.0 / r).max(1.0).ln();
        if e.real().to_f64() - top > (p as f64 + 64.0) * std::f64::consts::LN_2 {
            return Ok(vec![Complex::new(p); count]);
        }
        let e = (-e).exp();
        let zp = if m >= 0 { powi(z, m as u32) } else { Complex::with_val(p, 1) / powi(z, (-m) as u32) };
        let mut cur = e * zp;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                cur *= z;
            }
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// μ_j for j = jmin..=jmax. Each piece is integrated with all powers sharing
/// nodes; the ray is done first and sets the absolute accuracy target of the
/// circle pieces.
pub fn moment_table(params: &WeightParams, jmin: i64, jmax: i64, spec: &QuadratureSpec) -> Result<MomentTable> {
    params.validate()?;
    if jmax < jmin {
        return Err(Error::Domain("empty moment range".into()));
    }
    let p = spec.prec;
    let params = &params.at_prec(p);
    let count = (jmax - jmin + 1) as usize;
    let trunc = Float::with_val(p, &spec.rel_tol) >> 8;
    let contour = build_contour(params, jmax, &trunc)?;
    let f = powers_integrand(params, jmin, count);
    let (ray, ray_err) = quad_segment_vec(&f, &contour.ray, spec, None)?;
    let floors: Vec<Float> = ray
        .iter()
        .map(|v| {
            let a = Float::with_val(p, &spec.rel_tol * abs(v)) >> 4;
            if a > spec.abs_tol { a } else { spec.abs_tol.clone() }
        })
        .collect();
    let mut total: Vec<Complex> = ray;
    let mut errs: Vec<Float> = ray_err;
    for (seg, c) in contour.quadrature_pieces(params)? {
        if c.is_zero() {
            continue;
        }
        let ca = abs(&c);
        let (v, e) = quad_segment_vec(&f, &seg, spec, Some(&floors))?;
        for i in 0..count {
            total[i] += Complex::with_val(p, &v[i] * &c);
            errs[i] += Float::with_val(p, &e[i] * &ca);
        }
    }
    // tail bound of the truncated ray
    for e in errs.iter_mut() {
        *e += &trunc;
    }
    let entries = total
        .into_iter()
        .zip(errs)
        .enumerate()
        .map(|(i, (value, err))| MomentEntry { j: jmin + i as i64, value, err })
        .collect();
    Ok(MomentTable { params: params.clone(), jmin, entries, cutoff: contour.cutoff })
}

/// True when z lies in the region swept by the quadrature deformation (or on
/// the contour), where a Cauchy transform over the deformed path would differ
/// from the one over Γ.
pub fn near_contour(params: &WeightParams, z: &Complex) -> bool {
    let d = params.delta.to_f64();
    let (x, y) = (z.real().to_f64(), z.imag().to_f64());
    let on_ray = y == 0.0 && x >= 2.0 * d;
    let in_disk = if params.t.is_sign_negative() && !params.t.is_zero() {
        (x - d / 2.0).hypot(y) <= 1.5 * d
    } else {
        (x - d).hypot(y) <= d
    };
    on_ray || in_disk
}

/// ∫_Γ g(z) w(z) dz for a vector of functions g, over the same deformed path
/// as the moments; `degree` bounds the polynomial growth of g for the ray
/// cutoff.
pub fn contour_integral_vec<G>(params: &WeightParams, degree: i64, g: G, spec: &QuadratureSpec) -> Result<Vec<Complex>>
where
    G: Fn(&Complex) -> Vec<Complex>,
{
    params.validate()?;
    let p = spec.prec;
    let params = &params.at_prec(p);
    let trunc = Float::with_val(p, &spec.rel_tol) >> 8;
    let contour = build_contour(params, degree, &trunc)?;
    let w = powers_integrand(params, 0, 1);
    let f = |z: &Complex| -> Result<Vec<Complex>> {
        let wz = w(z)?.pop().unwrap();
        Ok(g(z).into_iter().map(|v| v * &wz).collect())
    };
    let (mut total, _) = quad_segment_vec(&f, &contour.ray, spec, None)?;
    let floors: Vec<Float> = total
        .iter()
        .map(|v| {
            let a = Float::with_val(p, &spec.rel_tol * abs(v)) >> 4;
            if a > spec.abs_tol { a } else { spec.abs_tol.clone() }
        })
        .collect();
    for (seg, c) in contour.quadrature_pieces(params)? {
        if c.is_zero() {
            continue;
        }
        let (v, _) = quad_segment_vec(&f, &seg, spec, Some(&floors))?;
        for (t, x) in total.iter_mut().zip(v) {
            *t += x * &c;
        }
    }
    Ok(total)
}

/// Single moment μ_j (j ≥ 0).
pub fn moment(j: i64, params: &WeightParams, spec: &QuadratureSpec) -> Result<Complex> {
    if j < 0 {
        return Err(Error::Domain("moment index must be non-negative".into()));
    }
    Ok(moment_table(params, j, j, spec)?.entries.remove(0).value)
}

/// K_ν(x) = ∫_0^∞ e^{-x cosh u} cosh(νu) du, truncated where the integrand
/// drops below 2^{-prec} relative to its peak.
pub fn bessel_k(nu: &Float, x: &Float, prec: u32) -> Result<Float> {
    if !(*x > 0) {
        return Err(Error::Domain("bessel_k needs x > 0".into()));
    }
    let nuf = nu.to_f64().abs();
    let xf = x.to_f64();
    // log-integrand −x cosh u + ν u; its maximum sits at sinh u = ν/x
    let g = |u: f64| -xf * u.cosh() + nuf * u;
    let umax = (nuf / xf).asinh();
    let peak = g(umax);
    let drop = f64::from(prec) * std::f64::consts::LN_2 + 20.0;
    let mut hi = umax + 1.0;
    while g(hi) > peak - drop {
        hi += 1.0;
    }
    let spec = QuadratureSpec::new(prec);
    let mut cuts = vec![0.0];
    if umax > 0.5 {
        cuts.push(umax);
    }
    cuts.push(hi);
    let mut total = Float::with_val(prec, 0);
    for w in cuts.windows(2) {
        let seg = PathSegment::line(Complex::with_val(prec, (w[0], 0)), Complex::with_val(prec, (w[1], 0)))?;
        let (v, _) = quad_segment(
            |u| {
                let ch = Complex::with_val(prec, u.cosh_ref());
                let a = Complex::with_val(prec, -ch * x);
                let nu_u = Complex::with_val(prec, u * nu);
                a.exp() * nu_u.cosh()
            },
            &seg,
            &spec,
        )?;
        total += v.real();
    }
    Ok(total)
}

/// μ_j = 2 t^{(j+n+1)/2} K_{j+n+1}(2n√t) for t > 0.
pub fn moment_oracle(j: i64, params: &WeightParams, prec: u32) -> Result<Float> {
    let t = Float::with_val(prec, &params.t);
    if !(t > 0) {
        return Err(Error::Domain("the Bessel closed form needs t > 0".into()));
    }
    let nu = Float::with_val(prec, j + i64::from(params.n) + 1);
    let x = Float::with_val(prec, t.sqrt_ref()) * (2 * params.n);
    let k = bessel_k(&nu, &x, prec)?;
    let tp = Float::with_val(prec, t.ln_ref()) * Float::with_val(prec, &nu / 2u32);
    Ok(tp.exp() * k * 2u32)
}
