//! Equilibrium measures of V_t(x) = x − log x + t/x: the regular one-cut
//! measure, the signed measure pinned at a_cr, the critical density, and the
//! g/φ functions, conformal map f and q near a_cr.

use crate::error::{Error, Result};
use crate::numkernel::linalg::solve_real;
use crate::numkernel::{
    abs, cplx_of, newton_solve, pi, pow2, quad_segment, EndpointHint, NewtonSpec, PathSegment, QuadratureSpec,
};
use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalConstants {
    pub t_cr: Float,
    pub a_cr: Float,
    pub b_cr: Float,
}

/// t_cr = −(3/4)(2^{1/3}−1)², a_cr = (3−2^{1/3}−2^{2/3})/2, b_cr = (3/2)(1+2^{1/3}+2^{2/3}).
pub fn critical_constants(prec: u32) -> CriticalConstants {
    let c = Float::with_val(prec, 2).cbrt();
    let c2 = Float::with_val(prec, c.square_ref());
    let t_cr = -Float::with_val(prec, &c - 1u32).square() * 3u32 / 4u32;
    let a_cr = (Float::with_val(prec, 3) - &c - &c2) / 2u32;
    let b_cr = (Float::with_val(prec, 1) + &c + &c2) * 3u32 / 2u32;
    CriticalConstants { t_cr, a_cr, b_cr }
}

impl CriticalConstants {
    pub fn prec(&self) -> u32 {
        self.t_cr.prec()
    }

    /// K = (2a_cr)^{-3/5}(a_cr b_cr)^{-1/2}(b_cr − a_cr)^{2/5}, so that
    /// s* = K n^{4/5} (t_cr − t).
    pub fn scaling_constant(&self) -> Float {
        let p = self.prec();
        let two_a = Float::with_val(p, &self.a_cr * 2u32);
        let ab = Float::with_val(p, &self.a_cr * &self.b_cr);
        let bma = Float::with_val(p, &self.b_cr - &self.a_cr);
        two_a.pow(Float::with_val(p, -3) / 5u32)
            * ab.sqrt().recip()
            * bma.pow(Float::with_val(p, 2) / 5u32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumData {
    pub t: Float,
    pub a: Float,
    pub b: Float,
    pub c: Float,
    pub l: Option<Float>,
    /// false when a + c < 0 (density negative near a)
    pub positive: bool,
    pub residual: Float,
}

fn endpoint_residual(t: &Float, a: &Float, b: &Float) -> [Float; 2] {
    let p = t.prec();
    let ab = Float::with_val(p, a * b);
    let sq = Float::with_val(p, ab.sqrt_ref());
    let apb = Float::with_val(p, a + b);
    let f1 = Float::with_val(p, 1) + Float::with_val(p, t * &apb) / (ab * 2u32) - &sq;
    let f2 = apb / 2u32 - Float::with_val(p, t / &sq) - 3u32;
    [f1, f2]
}

fn endpoint_jacobian(t: &Float, a: &Float, b: &Float) -> Vec<Vec<Float>> {
    let p = t.prec();
    let sq = Float::with_val(p, a * b).sqrt();
    let sq3 = Float::with_val(p, sq.clone().pow(3u32));
    let a2 = Float::with_val(p, a.square_ref());
    let b2 = Float::with_val(p, b.square_ref());
    let j11 = -Float::with_val(p, t / &a2) / 2u32 - Float::with_val(p, b / &sq) / 2u32;
    let j12 = -Float::with_val(p, t / &b2) / 2u32 - Float::with_val(p, a / &sq) / 2u32;
    let j21 = Float::with_val(p, 0.5f64) + Float::with_val(p, t * b) / Float::with_val(p, &sq3 * 2u32);
    let j22 = Float::with_val(p, 0.5f64) + Float::with_val(p, t * a) / Float::with_val(p, &sq3 * 2u32);
    vec![vec![j11, j12], vec![j21, j22]]
}

/// Endpoints of the one-cut measure by Newton continuation from t = 0. There is
/// a fold at t_cr: no real solution exists for t < t_cr, and at t_cr itself
/// Newton converges only linearly.
pub fn solve_endpoints(t: &Float) -> Result<EquilibriumData> {
    let p = t.prec();
    let cc = critical_constants(p);
    if *t < cc.t_cr {
        return Err(Error::Domain("no real endpoints for t < t_cr".into()));
    }
    let s2 = Float::with_val(p, 2).sqrt() * 2u32;
    let mut x = vec![Float::with_val(p, 3) - &s2, Float::with_val(p, 3) + &s2];
    let steps = if t.is_zero() { 1 } else { 16 };
    let mut spec = NewtonSpec::new(p);
    spec.max_iter = 2 * p as usize;
    let mut residual = Float::with_val(p, 0);
    for i in 1..=steps {
        let ti = Float::with_val(p, t * i) / steps as u32;
        let jac = |x: &[Float]| Ok(endpoint_jacobian(&ti, &x[0], &x[1]));
        let r = newton_solve(
            |x| {
                if !(x[0] > 0) || !(x[1] > 0) {
                    return Err(Error::Domain("endpoint left (0, ∞)".into()));
                }
                Ok(endpoint_residual(&ti, &x[0], &x[1]).to_vec())
            },
            Some(&jac),
            x,
            &spec,
        )?;
        x = r.root;
        residual = r.residual;
    }
    let (a, b) = (x[0].clone(), x[1].clone());
    let c = Float::with_val(p, t / Float::with_val(p, &a * &b).sqrt());
    let positive = Float::with_val(p, &a + &c) >= 0;
    Ok(EquilibriumData { t: t.clone(), a, b, c, l: None, positive, residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasureData {
    pub t: Float,
    pub b: Float,
    pub d0: Float,
    pub d1: Float,
    pub a_cr: Float,
    pub residual: Float,
}

/// F(b) = √(a_cr/b)(1 − t/(2a_cr) + t/(2b)) + (b − a_cr)/2 − 3
fn signed_residual(t: &Float, a: &Float, b: &Float) -> Float {
    let p = t.prec();
    let r = Float::with_val(p, a / b).sqrt();
    let bracket = Float::with_val(p, 1) - Float::with_val(p, t / a) / 2u32 + Float::with_val(p, t / b) / 2u32;
    r * bracket + Float::with_val(p, b - a) / 2u32 - 3u32
}

fn signed_derivative(t: &Float, a: &Float, b: &Float) -> Float {
    let p = t.prec();
    let sa = Float::with_val(p, a.sqrt_ref());
    let bracket = Float::with_val(p, 1) - Float::with_val(p, t / a) / 2u32 + Float::with_val(p, t / b) / 2u32;
    let b32 = Float::with_val(p, b.pow(Float::with_val(p, 1.5f64)));
    let b52 = Float::with_val(p, b.pow(Float::with_val(p, 2.5f64)));
    let term1 = -Float::with_val(p, &sa * &bracket) / (b32 * 2u32);
    let term2 = -Float::with_val(p, &sa * t) / (b52 * 2u32);
    term1 + term2 + Float::with_val(p, 0.5f64)
}

/// Signed measure with the left endpoint pinned at a_cr; Newton continuation
/// in t from the critical point.
pub fn solve_signed(t: &Float) -> Result<SignedMeasureData> {
    let p = t.prec();
    let cc = critical_constants(p);
    let a = cc.a_cr.clone();
    let mut b = cc.b_cr.clone();
    let dist = Float::with_val(p, t - &cc.t_cr).abs().to_f64();
    let steps = if dist == 0.0 { 1 } else { ((dist / 0.005).ceil() as u32).max(2) };
    let spec = NewtonSpec::new(p);
    let mut residual = Float::with_val(p, 0);
    for i in 1..=steps {
        let ti = Float::with_val(p, t - &cc.t_cr) * i / steps + &cc.t_cr;
        let jac = |x: &[Float]| Ok(vec![vec![signed_derivative(&ti, &a, &x[0])]]);
        let r = newton_solve(
            |x| {
                if !(x[0] > a) {
                    return Err(Error::Domain("b fell below a_cr".into()));
                }
                Ok(vec![signed_residual(&ti, &a, &x[0])])
            },
            Some(&jac),
            vec![b],
            &spec,
        )?;
        b = r.root[0].clone();
        residual = r.residual;
    }
    let sq = Float::with_val(p, &a / &b).sqrt();
    let d0 = -Float::with_val(p, t * &sq);
    let bracket = Float::with_val(p, 1) - Float::with_val(p, t / &a) / 2u32 + Float::with_val(p, t / &b) / 2u32;
    let d1 = -(sq * bracket);
    Ok(SignedMeasureData { t: t.clone(), b, d0, d1, a_cr: a, residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    Regular,
    Signed,
    Critical,
}

/// A density on [left, right] evaluated from the offset w = x − left so that
/// the edge behaviour is resolved without cancellation.
#[derive(Clone, Debug)]
pub enum DensityModel {
    Regular(EquilibriumData),
    Signed(SignedMeasureData),
    Critical(CriticalConstants),
}

impl DensityModel {
    pub fn build(t: &Float, mode: DensityMode) -> Result<Self> {
        Ok(match mode {
            DensityMode::Regular => DensityModel::Regular(solve_endpoints(t)?),
            DensityMode::Signed => DensityModel::Signed(solve_signed(t)?),
            DensityMode::Critical => DensityModel::Critical(critical_constants(t.prec())),
        })
    }

    pub fn support(&self) -> (Float, Float) {
        match self {
            DensityModel::Regular(e) => (e.a.clone(), e.b.clone()),
            DensityModel::Signed(s) => (s.a_cr.clone(), s.b.clone()),
            DensityModel::Critical(c) => (c.a_cr.clone(), c.b_cr.clone()),
        }
    }

    pub fn prec(&self) -> u32 {
        self.support().0.prec()
    }

    /// Density at x = left + w, given also r = right − x.
    fn eval_offset(&self, w: &Float, r: &Float) -> Float {
        let p = w.prec();
        let (left, _) = self.support();
        let x = Float::with_val(p, &left + w);
        let x2 = Float::with_val(p, x.square_ref());
        let twopi = pi(p) * 2u32;
        match self {
            DensityModel::Regular(e) => {
                let root = Float::with_val(p, w * r).sqrt();
                Float::with_val(p, &x + &e.c) * root / (twopi * x2)
            }
            DensityModel::Signed(s) => {
                let poly = Float::with_val(p, &x2 + Float::with_val(p, &s.d1 * &x)) + &s.d0;
                let root = Float::with_val(p, r / w).sqrt();
                poly * root / (twopi * x2)
            }
            DensityModel::Critical(_) => {
                let root = (Float::with_val(p, w.pow(3u32)) * r).sqrt();
                root / (twopi * x2)
            }
        }
    }

    pub fn eval(&self, x: &Float) -> Result<Float> {
        let (left, right) = self.support();
        if *x < left || *x > right {
            return Err(Error::Domain(format!("x = {} outside the support", x.to_f64())));
        }
        let p = x.prec();
        let w = Float::with_val(p, x - &left);
        let r = Float::with_val(p, &right - x);
        if w.is_zero() {
            return match self {
                DensityModel::Signed(_) => Err(Error::Domain("signed density is singular at a_cr".into())),
                _ => Ok(Float::with_val(p, 0)),
            };
        }
        Ok(self.eval_offset(&w, &r))
    }

    /// ∫ f(x) ρ(x) dx over [lo, hi] ⊂ support. `from_left` chooses which end
    /// the offset is measured from (put it at the singular end).
    fn integrate<F>(&self, lo: &Float, hi: &Float, g: F, spec: &QuadratureSpec) -> Result<Float>
    where
        F: Fn(&Float) -> Float,
    {
        let p = spec.prec;
        let (left, right) = self.support();
        let w0 = Float::with_val(p, lo - &left);
        let w1 = Float::with_val(p, hi - &left);
        let seg = PathSegment::line(cplx_of(&w0), cplx_of(&w1))?;
        let (v, _) = quad_segment(
            |wz| {
                let w = wz.real().clone();
                let r = Float::with_val(p, &right - &left) - &w;
                if !(w > 0) || !(r >= 0) {
                    return Complex::with_val(p, 0);
                }
                let x = Float::with_val(p, &left + &w);
                cplx_of(&(self.eval_offset(&w, &r) * g(&x)))
            },
            &seg,
            spec,
        )?;
        Ok(v.real().clone())
    }

    pub fn mass(&self, spec: &QuadratureSpec) -> Result<Float> {
        let (l, r) = self.support();
        self.integrate(&l, &r, |x| Float::with_val(x.prec(), 1), &edge_spec(spec))
    }

    /// 2∫ log|x − s| ρ(s) ds for x inside the support.
    pub fn log_potential_inside(&self, x: &Float, spec: &QuadratureSpec) -> Result<Float> {
        let p = spec.prec;
        let (l, r) = self.support();
        let mid = Float::with_val(p, &l + x) / 2u32;
        let spec = edge_spec(spec);
        let lg = |s: &Float| Float::with_val(p, x - s).abs().ln();
        let i1 = self.integrate(&l, &mid, lg, &spec)?;
        // near s = x integrate in v = |s − x| so that the log sees exact offsets
        let dl = Float::with_val(p, x - &mid);
        let seg = PathSegment::line(Complex::new(p), cplx_of(&dl))?;
        let right = r.clone();
        let (i2, _) = quad_segment(
            |vz| {
                let v = vz.real().clone();
                if !(v > 0) {
                    return Complex::new(p);
                }
                let s = Float::with_val(p, x - &v);
                let w = Float::with_val(p, &s - &l);
                let rr = Float::with_val(p, &right - &s);
                cplx_of(&(self.eval_offset(&w, &rr) * Float::with_val(p, v.ln_ref())))
            },
            &seg,
            &spec,
        )?;
        let dr = Float::with_val(p, &r - x);
        let seg = PathSegment::line(Complex::new(p), cplx_of(&dr))?;
        let (i3, _) = quad_segment(
            |vz| {
                let v = vz.real().clone();
                if !(v > 0) {
                    return Complex::new(p);
                }
                let s = Float::with_val(p, x + &v);
                let w = Float::with_val(p, &s - &l);
                let rr = Float::with_val(p, &dr - &v);
                if !(rr >= 0) {
                    return Complex::new(p);
                }
                cplx_of(&(self.eval_offset(&w, &rr) * Float::with_val(p, v.ln_ref())))
            },
            &seg,
            &spec,
        )?;
        Ok((i1 + i2.real() + i3.real()) * 2u32)
    }

    /// g(z) = ∫ log(z − s) ρ(s) ds for z off [left, right] (principal log).
    pub fn g(&self, z: &Complex, spec: &QuadratureSpec) -> Result<Complex> {
        let p = spec.prec;
        let (l, r) = self.support();
        if z.imag().is_zero() && *z.real() <= r {
            return Err(Error::BranchCut(z.clone()));
        }
        let re = self.integrate(&l, &r, |s| Float::with_val(p, Complex::with_val(p, z - s).ln().real()), &edge_spec(spec))?;
        let im = self.integrate(&l, &r, |s| Float::with_val(p, Complex::with_val(p, z - s).arg_ref()), &edge_spec(spec))?;
        Ok(Complex::with_val(p, (re, im)))
    }

    /// g′(z) = ∫ ρ(s)/(z − s) ds.
    pub fn g_prime(&self, z: &Complex, spec: &QuadratureSpec) -> Result<Complex> {
        let p = spec.prec;
        let (l, r) = self.support();
        let re = self.integrate(&l, &r, |s| Float::with_val(p, (Complex::with_val(p, 1) / Complex::with_val(p, z - s)).real()), &edge_spec(spec))?;
        let im = self.integrate(&l, &r, |s| Float::with_val(p, (Complex::with_val(p, 1) / Complex::with_val(p, z - s)).imag()), &edge_spec(spec))?;
        Ok(Complex::with_val(p, (re, im)))
    }
}

fn edge_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    spec.clone().with_hint(EndpointHint::Algebraic(-0.5))
}

/// Pointwise density for the given mode at time t.
pub fn density(x: &Float, t: &Float, mode: DensityMode) -> Result<Float> {
    DensityModel::build(t, mode)?.eval(x)
}

pub fn potential_real(x: &Float, t: &Float) -> Float {
    let p = x.prec();
    Float::with_val(p, x - Float::with_val(p, x.ln_ref())) + Float::with_val(p, t / x)
}

/// Lagrange multiplier l = 2∫log|x − s|ψ(s)ds − V_t(x) at x = (a_cr + b)/2,
/// plus the spread of the same expression over five interior points.
#[derive(Clone, Debug)]
pub struct LagrangeReport {
    pub l: Float,
    pub samples: Vec<(Float, Float)>,
    pub spread: Float,
}

pub fn g_and_l(signed: &SignedMeasureData, spec: &QuadratureSpec) -> Result<(DensityModel, LagrangeReport)> {
    let p = spec.prec;
    let model = DensityModel::Signed(signed.clone());
    let (l0, r0) = model.support();
    let width = Float::with_val(p, &r0 - &l0);
    let el = |x: &Float| -> Result<Float> { Ok(model.log_potential_inside(x, spec)? - potential_real(x, &signed.t)) };
    let centre = Float::with_val(p, &l0 + &r0) / 2u32;
    let l = el(&centre)?;
    let mut samples = vec![];
    for frac in [0.1f64, 0.3, 0.5, 0.7, 0.9] {
        let x = Float::with_val(p, &width * frac) + &l0;
        let v = el(&x)?;
        samples.push((x, v));
    }
    let mut lo = samples[0].1.clone();
    let mut hi = samples[0].1.clone();
    for (_, v) in samples.iter() {
        if *v < lo {
            lo = v.clone();
        }
        if *v > hi {
            hi = v.clone();
        }
    }
    let spread = hi - lo;
    Ok((model, LagrangeReport { l, samples, spread }))
}

/// 2g(x) − V_t(x) − l for real x > b.
pub fn variational_gap(model: &DensityModel, x: &Float, t: &Float, l: &Float, spec: &QuadratureSpec) -> Result<Float> {
    let p = spec.prec;
    let g = model.g(&cplx_of(x), spec)?;
    Ok(Float::with_val(p, g.real() * 2u32) - potential_real(x, t) - l)
}

// ---------------------------------------------------------------- φ maps

/// Side of the real axis for boundary values on (a_cr, ∞).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// ½∫_{a_cr}^z Q(s) (s−b)^{1/2} / (s² (s−a_cr)^{1/2}) ds with both roots on
/// arg ∈ (0, 2π), i.e. the ratio equals √(b−s)/√(a_cr−s) (principal).
#[derive(Clone, Debug)]
struct PhiIntegral {
    a: Float,
    b: Float,
    d1: Float,
    d0: Float,
}

impl PhiIntegral {
    /// Integrand at s = a + w.
    fn integrand(&self, w: &Complex, side: Option<Side>) -> Complex {
        let p = w.prec().0;
        let s = Complex::with_val(p, w + &self.a);
        let s2 = Complex::with_val(p, s.square_ref());
        let q = Complex::with_val(p, &s2 + Complex::with_val(p, &s * &self.d1)) + &self.d0;
        let bms = Complex::with_val(p, &self.b - &s);
        let ams = Complex::with_val(p, -w);
        let ratio = match side {
            Some(sd) if w.imag().is_zero() && w.real().is_sign_positive() => {
                // on the real axis right of a: √(a−s) = ∓i√(s−a); √(b−s) likewise past b
                let sgn: i32 = if sd == Side::Upper { -1 } else { 1 };
                let root_a = Complex::with_val(p, (0, Float::with_val(p, w.real().sqrt_ref()) * sgn));
                let root_b = if bms.real().is_sign_negative() {
                    Complex::with_val(p, (0, Float::with_val(p, (-bms.real().clone()).sqrt()) * sgn))
                } else {
                    Complex::with_val(p, bms.real().sqrt_ref())
                };
                root_b / root_a
            }
            _ => Complex::with_val(p, bms.sqrt_ref()) / ams.sqrt(),
        };
        q * ratio / s2 / 2u32
    }

    fn eval(&self, z: &Complex, side: Option<Side>, spec: &QuadratureSpec) -> Result<Complex> {
        let p = spec.prec;
        if z.imag().is_zero() && !z.real().is_sign_positive() || z.is_zero() {
            return Err(Error::BranchCut(z.clone()));
        }
        let wz = Complex::with_val(p, z - &self.a);
        if wz.is_zero() {
            return Ok(Complex::new(p));
        }
        let on_axis = wz.imag().is_zero() && wz.real().is_sign_positive();
        let side = if on_axis {
            Some(side.ok_or_else(|| Error::BranchCut(z.clone()))?)
        } else {
            None
        };
        let spec = spec.clone().with_hint(EndpointHint::Algebraic(-0.5));
        let wb = Float::with_val(p, &self.b - &self.a);
        if on_axis && *wz.real() > wb {
            // split at b so that each piece has its singular point at an end
            let s1 = PathSegment::line(Complex::new(p), cplx_of(&wb))?;
            let (v1, _) = quad_segment(|w| self.integrand(w, side), &s1, &spec)?;
            let s2 = PathSegment::line(cplx_of(&wb), wz)?;
            let (v2, _) = quad_segment(|w| self.integrand(w, side), &s2, &spec)?;
            return Ok(v1 + v2);
        }
        let seg = PathSegment::line(Complex::new(p), wz)?;
        let (v, _) = quad_segment(|w| self.integrand(w, side), &seg, &spec)?;
        Ok(v)
    }
}

#[derive(Clone, Debug)]
pub struct PhiMaps {
    pub consts: CriticalConstants,
    pub signed: SignedMeasureData,
    pub spec: QuadratureSpec,
    t_minus_tcr: Float,
    phi_t_int: PhiIntegral,
    phi_cr_int: PhiIntegral,
}

pub fn phi_maps(t: &Float, spec: &QuadratureSpec) -> Result<PhiMaps> {
    let p = spec.prec;
    let consts = critical_constants(p);
    let signed = solve_signed(t)?;
    let a = consts.a_cr.clone();
    let phi_t_int = PhiIntegral { a: a.clone(), b: signed.b.clone(), d1: signed.d1.clone(), d0: signed.d0.clone() };
    let phi_cr_int = PhiIntegral {
        a: a.clone(),
        b: consts.b_cr.clone(),
        d1: -Float::with_val(p, &a * 2u32),
        d0: Float::with_val(p, a.square_ref()),
    };
    let t_minus_tcr = Float::with_val(p, t - &consts.t_cr);
    Ok(PhiMaps { consts, signed, spec: spec.clone(), t_minus_tcr, phi_t_int, phi_cr_int })
}

impl PhiMaps {
    pub fn prec(&self) -> u32 {
        self.spec.prec
    }

    pub fn t(&self) -> &Float {
        &self.signed.t
    }

    pub fn phi_t(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        self.phi_t_int.eval(z, side, &self.spec)
    }

    pub fn phi_cr(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        self.phi_cr_int.eval(z, side, &self.spec)
    }

    /// φ₀ = (φ_t − φ_cr)/(t − t_cr).
    pub fn phi0(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        if self.t_minus_tcr.is_zero() {
            return Err(Error::Domain("φ₀ is a difference quotient and needs t ≠ t_cr".into()));
        }
        Ok((self.phi_t(z, side)? - self.phi_cr(z, side)?) / &self.t_minus_tcr)
    }

    /// G(z) = −(5/4)φ_cr(z)/((z−a_cr)²√(a_cr−z)); analytic and positive at a_cr.
    fn g_factor(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        let p = self.prec();
        let a = &self.consts.a_cr;
        let w = Complex::with_val(p, z - a);
        if w.is_zero() {
            // limit √(b−a)/(4a²)
            let bma = Float::with_val(p, &self.consts.b_cr - a);
            let a2 = Float::with_val(p, a.square_ref()) * 4u32;
            return Ok(cplx_of(&(bma.sqrt() / a2)));
        }
        let phi = self.phi_cr(z, side)?;
        let root = self.root_a_minus_z(z, side);
        let den = Complex::with_val(p, w.square_ref()) * root;
        Ok(phi * Float::with_val(p, -1.25f64) / den)
    }

    /// √(a_cr − z), principal, with the side convention on the real axis.
    fn root_a_minus_z(&self, z: &Complex, side: Option<Side>) -> Complex {
        let p = self.prec();
        let d = Complex::with_val(p, &self.consts.a_cr - z);
        if d.imag().is_zero() && d.real().is_sign_negative() {
            let sgn: i32 = if side == Some(Side::Lower) { 1 } else { -1 };
            let m = Float::with_val(p, -d.real().clone()).sqrt();
            return Complex::with_val(p, (0, m * sgn));
        }
        d.sqrt()
    }

    /// f(z) = −(z − a_cr) G(z)^{2/5}; satisfies f^{5/2} = −(5/4)φ_cr near a_cr
    /// and f ≈ −(b_cr−a_cr)^{1/5}(2a_cr)^{-4/5}(z − a_cr).
    pub fn f(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        let p = self.prec();
        let g = self.g_factor(z, side)?;
        let e = Complex::with_val(p, (Float::with_val(p, 2) / 5u32, 0));
        let w = Complex::with_val(p, z - &self.consts.a_cr);
        Ok(-(w * g.pow(&e)))
    }

    /// f^{1/2} = √(a_cr − z) G^{1/5}, the root continuous through a_cr.
    pub fn f_sqrt(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        let p = self.prec();
        let g = self.g_factor(z, side)?;
        let e = Complex::with_val(p, (Float::with_val(p, 1) / 5u32, 0));
        Ok(self.root_a_minus_z(z, side) * g.pow(&e))
    }

    /// q(z) = −(t − t_cr) φ₀(z) / f(z)^{1/2} = −(φ_t − φ_cr)/f^{1/2}.
    pub fn q(&self, z: &Complex, side: Option<Side>) -> Result<Complex> {
        let p = self.prec();
        if self.t_minus_tcr.is_zero() {
            return Ok(Complex::new(p));
        }
        let num = self.phi_t(z, side)? - self.phi_cr(z, side)?;
        let den = self.f_sqrt(z, side)?;
        if den.is_zero() {
            return Err(Error::DivisionNearZero("f^{1/2} vanishes at a_cr; use q_at_acr".into()));
        }
        Ok(-(num / den))
    }

    /// q(a_cr) by cubic extrapolation of q(a_cr − ε), ε ∈ {h, 2h, 3h}, along
    /// the real axis where q is analytic.
    pub fn q_at_acr(&self) -> Result<Complex> {
        let p = self.prec();
        let h = pow2(p, -(p as i32) / 6).max(&Float::with_val(p, 1e-8f64));
        let mut v = vec![];
        for k in 1..=3u32 {
            let z = cplx_of(&(Float::with_val(p, &self.consts.a_cr) - Float::with_val(p, &h * k)));
            v.push(self.q(&z, None)?);
        }
        // P(0) from P(h), P(2h), P(3h): 3P1 − 3P2 + P3
        Ok(Complex::with_val(p, &v[0] * 3u32) - Complex::with_val(p, &v[1] * 3u32) + &v[2])
    }

    /// Closed form q(a_cr) = −K (t − t_cr).
    pub fn q_at_acr_closed(&self) -> Float {
        -(self.consts.scaling_constant() * &self.t_minus_tcr)
    }

    pub fn s_star(&self, n: u32) -> Float {
        let p = self.prec();
        let n45 = Float::with_val(p, n).pow(Float::with_val(p, 4) / 5u32);
        n45 * self.q_at_acr_closed()
    }
}

/// θ(ζ, s) = (4/5) ζ^{5/2} + s ζ^{1/2} with ζ^{5/2} := (ζ^{1/2})^5.
pub fn theta_with_root(root: &Complex, s: &Complex) -> Complex {
    let p = root.prec().0;
    let r5 = Complex::with_val(p, root.pow(5u32));
    r5 * (Float::with_val(p, 4) / 5u32) + Complex::with_val(p, s * root)
}

pub fn theta(zeta: &Complex, s: &Complex) -> Complex {
    let root = zeta.clone().sqrt();
    theta_with_root(&root, s)
}

/// Residual of θ(n^{2/5}f, n^{4/5}q) + nφ_t at z, with ζ^{1/2} = n^{1/5}f^{1/2}.
pub fn theta_relation_residual(maps: &PhiMaps, n: u32, z: &Complex) -> Result<Float> {
    let p = maps.prec();
    let nf = Float::with_val(p, n);
    let n15 = Float::with_val(p, nf.clone().pow(Float::with_val(p, 1) / 5u32));
    let n45 = Float::with_val(p, n15.clone().pow(4u32));
    let root = maps.f_sqrt(z, None)? * &n15;
    let s = maps.q(z, None)? * &n45;
    let th = theta_with_root(&root, &s);
    let phi = maps.phi_t(z, None)? * &nf;
    let scale = abs(&phi).max(&Float::with_val(p, 1));
    Ok(abs(&(th + phi)) / scale)
}

// ---------------------------------------------------------------- sign maps

#[derive(Clone, Debug, Serialize)]
pub struct RegionPoint {
    pub x: f64,
    pub y: f64,
    pub sign: i8,
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// extra log-spaced points around a_cr: decades below |z − a_cr| = a_cr
    pub log_decades: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x_range: (-0.5, 7.0), y_max: 2.0, nx: 31, ny: 17, log_decades: 3 }
    }
}

#[derive(Clone, Debug)]
pub struct RegionMap {
    pub points: Vec<RegionPoint>,
    pub checks: Vec<(String, bool)>,
}

impl RegionMap {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "sign_re_phi_t"]).map_err(|e| Error::Io(e.to_string()))?;
        for pt in self.points.iter() {
            wr.write_record([pt.x.to_string(), pt.y.to_string(), pt.sign.to_string()])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn sign_of(x: &Float) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_sign_negative() {
        -1
    } else {
        1
    }
}

/// Classifies sign(Re φ_t) on a grid and runs the sign assertions; the first
/// failed assertion is returned as ASSERTION_FAILED.
pub fn sign_region_check(maps: &PhiMaps, grid: &GridSpec) -> Result<RegionMap> {
    let p = maps.prec();
    let a = maps.consts.a_cr.to_f64();
    let b = maps.signed.b.to_f64();
    let mut xs: Vec<f64> = (0..grid.nx)
        .map(|i| grid.x_range.0 + (grid.x_range.1 - grid.x_range.0) * i as f64 / (grid.nx.max(2) - 1) as f64)
        .collect();
    let mut ys: Vec<f64> = (0..grid.ny).map(|j| grid.y_max * (2.0 * j as f64 / (grid.ny.max(2) - 1) as f64 - 1.0)).collect();
    for d in 0..grid.log_decades {
        let r = a * 10f64.powi(-(d as i32));
        xs.push(a - r / 2.0);
        xs.push(a + r / 2.0);
        ys.push(r / 2.0);
        ys.push(-r / 2.0);
    }
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let mut points = vec![];
    for &x in xs.iter() {
        for &y in ys.iter() {
            if y == 0.0 && x <= 0.0 {
                continue;
            }
            let z = Complex::with_val(p, (x, y));
            let side = if y == 0.0 { Some(Side::Upper) } else { None };
            match maps.phi_t(&z, side) {
                Ok(v) => points.push(RegionPoint { x, y, sign: sign_of(v.real()) }),
                Err(Error::BranchCut(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    let mut checks = vec![];
    let fail = |what: &str, z: &Complex| Error::AssertionFailed { what: what.into(), point: format!("{}", z.to_string_radix(10, Some(12))) };
    let delta = a / 2.0;
    // circle points away from a_cr
    for k in 1..=5 {
        let th = std::f64::consts::PI * k as f64 / 6.0;
        for sg in [1.0, -1.0] {
            let z = Complex::with_val(p, (delta + delta * th.cos(), sg * delta * th.sin()));
            let v = maps.phi_t(&z, None)?;
            if !v.real().is_sign_positive() {
                return Err(fail("Re φ_t > 0 on the circle", &z));
            }
        }
    }
    checks.push(("Re phi_t > 0 on circle samples".to_string(), true));
    for dx in [0.5, 1.0, 3.0] {
        let z = Complex::with_val(p, (b + dx, 0.0));
        let v = maps.phi_t(&z, Some(Side::Upper))?;
        if !v.real().is_sign_positive() {
            return Err(fail("Re φ_t > 0 right of b", &z));
        }
    }
    checks.push(("Re phi_t > 0 on (b+r, inf)".to_string(), true));
    let r = 0.05 * (b - a);
    for k in 1..=5 {
        let x = a + r + (b - a - 2.0 * r) * k as f64 / 6.0;
        for sg in [1.0, -1.0] {
            let z = Complex::with_val(p, (x, sg * 1e-3));
            let v = maps.phi_t(&z, None)?;
            if !v.real().is_sign_negative() {
                return Err(fail("Re φ_t < 0 next to the support", &z));
            }
        }
    }
    checks.push(("Re phi_t < 0 beside (a_cr+r, b-r)".to_string(), true));
    let mut last: Option<Float> = None;
    for k in 1..=8 {
        let th = std::f64::consts::PI * k as f64 / 9.0;
        let z = Complex::with_val(p, (delta + delta * th.cos(), delta * th.sin()));
        let v = maps.phi_cr(&z, None)?.real().clone();
        if let Some(prev) = &last {
            if v <= *prev {
                return Err(fail("Re φ_cr increasing along the upper circle", &z));
            }
        }
        last = Some(v);
    }
    checks.push(("Re phi_cr increasing along upper circle".to_string(), true));
    Ok(RegionMap { points, checks })
}

/// Newton-free helper kept for the solver tests: solve a 2×2 real system.
pub fn solve2(a: Vec<Vec<Float>>, b: Vec<Float>) -> Result<Vec<Float>> {
    solve_real(a, b)
}
