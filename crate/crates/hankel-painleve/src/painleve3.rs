//! The Painlevé III equation satisfied by a_k(t) = α_k − (2k+1+n)/n:
//!
//!   a″ = a′²/a − a′/t + n(2k+1+n) a²/t² + n² a³/t² + n²/t − n²/a,
//!
//! its launch at the singular point t = 0, Taylor continuation, and the checks
//! that tie it to the Hankel data (u-transform, first integral, Lax pair).
//!
//! a(0) = 0, a′(0) = 1 leave one constant free: in b = a/t the linearised
//! operator (i² − n²) vanishes at order i = n, so the expansion picks up
//! t^{n+1} log t and an arbitrary coefficient B of t^{n+1}. The launch is a
//! series in (t, log t) with B fitted to one Hankel value.

use crate::error::{Error, Result};
use crate::numkernel::{
    abs, cplx_of, finite_diff, finite_diff_orders, newton_solve, ode_solve, pi, NewtonSpec, OdeSpec, QuadratureSpec,
    SolutionGrid, StepPolicy, TaylorField,
};
use crate::orthopoly::{
    hankel_derivatives, moments_for, recurrence_range, recurrence_table, rel_residual, y_boundary, y_matrix,
    HankelDerivatives, YBoundaryData,
};
use crate::weight::WeightParams;
use rug::ops::Pow;
use rug::Assign;
use rug::{Complex, Float};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct P3Params {
    pub k: u32,
    pub n: u32,
}

impl P3Params {
    pub fn new(k: u32, n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        Ok(P3Params { k, n })
    }

    /// n(2k+1+n)
    pub fn m(&self) -> u32 {
        self.n * (2 * self.k + 1 + self.n)
    }

    /// s = n i √(−t) with the principal root: real (−n√t) for t > 0.
    pub fn s(&self, t: &Complex) -> Complex {
        let p = t.prec().0;
        let mut mt = Complex::with_val(p, -t);
        if mt.imag().is_zero() {
            // −(x + 0i) carries −0 and would select the other root
            mt.mut_imag().assign(0);
        }
        Complex::with_val(p, (0, self.n)) * mt.sqrt()
    }

    pub fn theta0(&self) -> i64 {
        i64::from(self.n)
    }

    pub fn theta_inf(&self) -> i64 {
        -(2 * i64::from(self.k) + i64::from(self.n))
    }
}

/// Residual of T²AA″ − T²A′² + TAA′ − mA³ − n²A⁴ − n²TA + n²T², the ODE times t²a.
pub fn ode_residual(pp: &P3Params, t: &Complex, a: &Complex, da: &Complex, d2a: &Complex) -> Complex {
    let p = t.prec().0;
    let n2 = u64::from(pp.n) * u64::from(pp.n);
    let t2 = Complex::with_val(p, t.square_ref());
    let mut r = Complex::with_val(p, &t2 * Complex::with_val(p, a * d2a));
    r -= Complex::with_val(p, &t2 * Complex::with_val(p, da.square_ref()));
    r += Complex::with_val(p, t * Complex::with_val(p, a * da));
    let a2 = Complex::with_val(p, a.square_ref());
    let a3 = Complex::with_val(p, &a2 * a);
    r -= a3.clone() * pp.m();
    r -= Complex::with_val(p, &a3 * a) * n2;
    r -= Complex::with_val(p, t * a) * n2;
    r += t2 * n2;
    r
}

/// Residual of the ODE as written (a″ − RHS), normalised by 1 + |a″|.
pub fn ode_residual_normalised(pp: &P3Params, t: &Complex, a: &Complex, da: &Complex, d2a: &Complex) -> Float {
    let p = t.prec().0;
    let r = ode_residual(pp, t, a, da, d2a);
    let scale = Complex::with_val(p, t.square_ref()) * a;
    abs(&(r / scale)) / (abs(d2a) + 1u32)
}

// ------------------------------------------------------------- psi-series

type Poly = Vec<Complex>;

fn padd(a: &mut Poly, b: &Poly) {
    if b.len() > a.len() {
        let p = b[0].prec().0;
        a.resize(b.len(), Complex::new(p));
    }
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += y;
    }
}

fn psub(a: &mut Poly, b: &Poly) {
    if b.len() > a.len() {
        let p = b[0].prec().0;
        a.resize(b.len(), Complex::new(p));
    }
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x -= y;
    }
}

fn pmul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let p = a[0].prec().0;
    let mut out = vec![Complex::new(p); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Complex::with_val(p, x * y);
        }
    }
    out
}

fn pscale(a: &Poly, c: u64) -> Poly {
    a.iter().map(|x| Complex::with_val(x.prec().0, x * c)).collect()
}

fn pderiv(a: &Poly) -> Poly {
    a.iter().enumerate().skip(1).map(|(i, x)| Complex::with_val(x.prec().0, x * i as u32)).collect()
}

fn peval(a: &Poly, l: &Complex) -> Complex {
    let p = l.prec().0;
    let mut acc = Complex::new(p);
    for c in a.iter().rev() {
        acc *= l;
        acc += c;
    }
    acc
}

/// b(t) = a(t)/t = Σ t^i P_i(log t), P_0 = 1.
#[derive(Clone, Debug)]
pub struct PsiSeries {
    pub params: P3Params,
    pub b_const: Complex,
    pub terms: Vec<Poly>,
}

impl PsiSeries {
    pub fn build(params: P3Params, b_const: &Complex, nterms: usize) -> Result<Self> {
        let p = b_const.prec().0;
        let n = u64::from(params.n);
        let m = u64::from(params.m());
        let one = vec![Complex::with_val(p, 1)];
        let mut ps: Vec<Poly> = vec![one.clone()];
        // (θb)_j, (θ²b)_j and the power series of b², b³, b⁴
        let mut d1: Vec<Poly> = vec![vec![]];
        let mut d2: Vec<Poly> = vec![vec![]];
        let mut b2: Vec<Poly> = vec![one.clone()];
        let mut b3: Vec<Poly> = vec![one.clone()];
        let mut b4: Vec<Poly> = vec![one];
        for i in 1..nterms {
            let iu = i as u64;
            let mut r: Poly = vec![];
            for j in 1..i {
                psub(&mut r, &pmul(&ps[j], &d2[i - j]));
                padd(&mut r, &pmul(&d1[j], &d1[i - j]));
            }
            padd(&mut r, &pscale(&b3[i - 1], m));
            if i >= 2 {
                padd(&mut r, &pscale(&b4[i - 2], n * n));
            }
            let pi_poly = if iu == n {
                // 2n Q′ + Q″ = R, P = B + Q
                let deg = r.len();
                let mut s = vec![Complex::new(p); deg];
                for e in (0..deg).rev() {
                    let mut v = r[e].clone();
                    if e + 1 < deg {
                        v -= Complex::with_val(p, &s[e + 1] * (e as u32 + 1));
                    }
                    s[e] = v / (2 * n);
                }
                let mut q = vec![b_const.clone()];
                for (e, c) in s.into_iter().enumerate() {
                    q.push(c / (e as u32 + 1));
                }
                q
            } else {
                let lam = Complex::with_val(p, (iu * iu) as f64 - (n * n) as f64);
                let deg = r.len();
                let mut q = vec![Complex::new(p); deg];
                for e in (0..deg).rev() {
                    let mut v = r[e].clone();
                    if e + 1 < deg {
                        v -= Complex::with_val(p, &q[e + 1] * (2 * iu * (e as u64 + 1)));
                    }
                    if e + 2 < deg {
                        v -= Complex::with_val(p, &q[e + 2] * ((e as u64 + 2) * (e as u64 + 1)));
                    }
                    q[e] = v / &lam;
                }
                q
            };
            let dp = pderiv(&pi_poly);
            let ddp = pderiv(&dp);
            let mut t1 = pscale(&pi_poly, iu);
            padd(&mut t1, &dp);
            let mut t2 = pscale(&pi_poly, iu * iu);
            padd(&mut t2, &pscale(&dp, 2 * iu));
            padd(&mut t2, &ddp);
            ps.push(pi_poly);
            d1.push(t1);
            d2.push(t2);
            let conv = |x: &[Poly], y: &[Poly]| {
                let mut acc: Poly = vec![];
                for j in 0..=i {
                    padd(&mut acc, &pmul(&x[j], &y[i - j]));
                }
                acc
            };
            let v2 = conv(&ps, &ps);
            b2.push(v2);
            let v3 = conv(&b2, &ps);
            b3.push(v3);
            let v4 = conv(&b3, &ps);
            b4.push(v4);
        }
        Ok(PsiSeries { params, b_const: b_const.clone(), terms: ps })
    }

    /// log t with arg ∈ (−π, π]; for t < 0 this is ln|t| + iπ.
    fn log_t(t: &Complex) -> Complex {
        let p = t.prec().0;
        if t.imag().is_zero() && t.real().is_sign_negative() {
            let l = Float::with_val(p, t.real().clone().abs().ln());
            return Complex::with_val(p, (l, pi(p)));
        }
        Complex::with_val(p, t.ln_ref())
    }

    /// (a, a′, tail estimate) at t.
    pub fn eval(&self, t: &Complex) -> (Complex, Complex, Float) {
        let p = t.prec().0;
        let l = Self::log_t(t);
        let mut b = Complex::new(p);
        let mut db = Complex::new(p);
        let mut tp = Complex::with_val(p, 1);
        let mut last = Float::with_val(p, 0);
        let nt = self.terms.len();
        for (i, pi_poly) in self.terms.iter().enumerate() {
            let v = Complex::with_val(p, &tp * peval(pi_poly, &l));
            let dv = Complex::with_val(p, &tp * peval(&pderiv(pi_poly), &l));
            if i + 2 >= nt {
                let m = abs(&v);
                if m > last {
                    last = m;
                }
            }
            // a′ = Σ t^i ((i+1) P_i + P_i′)
            db += Complex::with_val(p, &v * (i as u32 + 1)) + dv;
            b += v;
            tp *= t;
        }
        let a = Complex::with_val(p, &b * t);
        let tail = last * abs(t);
        (a, db, tail)
    }

    /// Coefficient of t² in a(t): the first non-trivial series coefficient.
    pub fn c2(&self) -> Complex {
        self.terms[1][0].clone()
    }
}

/// Fit B so that the series matches a target a(t_f).
pub fn fit_launch(params: P3Params, t_f: &Complex, target: &Complex, nterms: usize) -> Result<PsiSeries> {
    let p = t_f.prec().0;
    let spec = NewtonSpec { tol: Float::with_val(p, abs(target) * crate::numkernel::pow2(p, -(p as i32) + 40)), max_iter: 40 };
    let res = newton_solve(
        |x| {
            let b = Complex::with_val(p, (&x[0], &x[1]));
            let s = PsiSeries::build(params, &b, nterms)?;
            let (a, _, _) = s.eval(t_f);
            let d = a - target;
            Ok(vec![d.real().clone(), d.imag().clone()])
        },
        None,
        vec![Float::with_val(p, 0), Float::with_val(p, 0)],
        &spec,
    )?;
    let b = Complex::with_val(p, (&res.root[0], &res.root[1]));
    PsiSeries::build(params, &b, nterms)
}

/// Terms needed so that the last retained term at |t| is below tol².
pub fn launch_terms(params: P3Params, t: &Complex, tol: f64, prec: u32) -> Result<usize> {
    let target = tol * tol;
    let mut nterms = 16;
    loop {
        let s = PsiSeries::build(params, &Complex::with_val(prec, 0), nterms)?;
        let (_, _, tail) = s.eval(t);
        if tail.to_f64() < target {
            return Ok(nterms);
        }
        nterms *= 2;
        if nterms > 1024 {
            return Err(Error::SeriesLaunchFailed(format!("series does not converge at |t| = {}", abs(t).to_f64())));
        }
    }
}

// ------------------------------------------------------------- Taylor field

/// The ODE in polynomial form, expanded about t₀ with T = t₀ + τ.
pub struct P3Field {
    pub params: P3Params,
}

impl TaylorField for P3Field {
    fn order(&self) -> usize {
        2
    }

    fn coefficients(&self, s0: &Complex, state: &[Complex], terms: usize) -> Result<Vec<Complex>> {
        let p = s0.prec().0;
        let n2 = u64::from(self.params.n) * u64::from(self.params.n);
        let m = self.params.m();
        let t0 = s0;
        let t02 = Complex::with_val(p, t0.square_ref());
        let two_t0 = Complex::with_val(p, t0 * 2u32);
        let a0 = state[0].clone();
        if abs(&a0).to_f64() < 1e-300 || s0.is_zero() {
            return Err(Error::DivisionNearZero("P_III Taylor step at a = 0 or t = 0".into()));
        }
        let mut a: Vec<Complex> = vec![a0.clone(), state[1].clone()];
        a.resize(terms.max(2), Complex::new(p));
        let mut pw2: Vec<Complex> = vec![];
        let mut pw3: Vec<Complex> = vec![];
        let mut pw4: Vec<Complex> = vec![];
        let lead = Complex::with_val(p, &t02 * &a0);
        // [x·y]_j where y is given by an index map
        let conv = |x: &[Complex], f: &dyn Fn(usize) -> Complex, j: usize| {
            let mut acc = Complex::new(p);
            for i in 0..=j {
                acc += Complex::with_val(p, &x[i] * f(j - i));
            }
            acc
        };
        for j in 0..terms.saturating_sub(2) {
            // powers of A up to index j
            pw2.push(conv(&a, &|i| a[i].clone(), j));
            pw3.push(conv(&pw2, &|i| a[i].clone(), j));
            pw4.push(conv(&pw3, &|i| a[i].clone(), j));
            let d1 = |i: usize| Complex::with_val(p, &a[i + 1] * (i as u32 + 1));
            let d2 = |i: usize| Complex::with_val(p, &a[i + 2] * ((i as u32 + 2) * (i as u32 + 1)));
            let aa2 = |jj: usize| conv(&a, &d2, jj);
            let a1a1 = |jj: usize| {
                let mut acc = Complex::new(p);
                for i in 0..=jj {
                    acc += Complex::with_val(p, d1(i) * d1(jj - i));
                }
                acc
            };
            let aa1 = |jj: usize| conv(&a, &d1, jj);
            let t2x = |f: &dyn Fn(usize) -> Complex| {
                let mut v = Complex::with_val(p, &t02 * f(j));
                if j >= 1 {
                    v += Complex::with_val(p, &two_t0 * f(j - 1));
                }
                if j >= 2 {
                    v += f(j - 2);
                }
                v
            };
            // A_{j+2} is still zero here, so aa2(j) omits the unknown term
            let mut r = t2x(&aa2);
            r -= t2x(&a1a1);
            r += Complex::with_val(p, t0 * aa1(j));
            if j >= 1 {
                r += aa1(j - 1);
            }
            r -= Complex::with_val(p, &pw3[j] * m);
            r -= Complex::with_val(p, &pw4[j] * n2);
            let mut ta = Complex::with_val(p, t0 * &a[j]);
            if j >= 1 {
                ta += &a[j - 1];
            }
            r -= ta * n2;
            match j {
                0 => r += Complex::with_val(p, &t02 * n2),
                1 => r += Complex::with_val(p, &two_t0 * n2),
                2 => r += n2,
                _ => {}
            }
            let den = Complex::with_val(p, &lead * ((j as u32 + 2) * (j as u32 + 1)));
            a[j + 2] = -(r / den);
        }
        a.truncate(terms);
        Ok(a)
    }
}

#[derive(Clone, Debug)]
pub struct P3Trajectory {
    pub params: P3Params,
    pub series: PsiSeries,
    pub t_launch: Complex,
    pub grid: SolutionGrid,
}

impl P3Trajectory {
    /// (a, a′) at t: from the series between 0 and the launch point, from the
    /// Taylor grid beyond it.
    pub fn eval(&self, t: &Complex) -> Result<(Complex, Complex)> {
        let p = t.prec().0;
        let lf = self.t_launch.real().to_f64();
        let tf = t.real().to_f64();
        if tf.abs() <= lf.abs() && tf * lf >= 0.0 {
            let (a, da, _) = self.series.eval(t);
            return Ok((a, da));
        }
        let v = self
            .grid
            .eval(t)
            .ok_or_else(|| Error::Domain(format!("t = {} outside the computed trajectory", t.real().to_f64())))?;
        Ok((Complex::with_val(p, &v[0]), Complex::with_val(p, &v[1])))
    }
}

/// Launch from the fitted series at t_launch and Taylor-continue to t_end.
pub fn p3_solve(series: &PsiSeries, t_launch: &Complex, t_end: &Complex, spec: &OdeSpec) -> Result<P3Trajectory> {
    let (a, da, tail) = series.eval(t_launch);
    if tail > spec.tol.clone() * abs(&a) {
        return Err(Error::SeriesLaunchFailed(format!("series tail {} at the launch point", tail.to_f64())));
    }
    let field = P3Field { params: series.params };
    let grid = ode_solve(&field, &[a, da], t_launch, t_end, spec)?.into_complete()?;
    Ok(P3Trajectory { params: series.params, series: series.clone(), t_launch: t_launch.clone(), grid })
}

/// a_{k,n}(t) from a fresh moment table.
pub fn hankel_a(k: u32, params: &WeightParams, spec: &QuadratureSpec) -> Result<Complex> {
    let k = k as usize;
    let tab = crate::weight::moment_table(params, 0, 2 * k as i64 + 1, spec)?;
    Ok(recurrence_range(k, k, &tab)?.entry(k)?.a.clone())
}

/// Fit the launch constant to the Hankel value at t_f and integrate to t_end.
pub fn p3_solve_from_hankel(
    k: u32,
    weight: &WeightParams,
    t_f: &Float,
    t_end: &Float,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<P3Trajectory> {
    let p = spec.prec;
    let pp = P3Params::new(k, weight.n)?;
    let tf = cplx_of(t_f);
    let target = hankel_a(k, &weight.with_t(t_f), spec)?;
    let nterms = launch_terms(pp, &tf, tol, p)?;
    let series = fit_launch(pp, &tf, &target, nterms)?;
    p3_solve(&series, &tf, &cplx_of(t_end), &OdeSpec::new(p, tol * 1e-6))
}

#[derive(Clone, Debug)]
pub struct P3VerifyPoint {
    pub t: Float,
    pub a_hankel: Complex,
    pub a_ode: Complex,
    pub deviation: Float,
    /// ODE residual of the Hankel-derived a with 5-point differences
    pub hankel_residual: Float,
}

/// Five-point central first and second differences of g at x.
fn five_point<G>(mut g: G, x: &Float, h: &Float) -> Result<(Complex, Complex, Complex)>
where
    G: FnMut(&Float) -> Result<Complex>,
{
    let p = x.prec();
    let v: Vec<Complex> = [-2i32, -1, 0, 1, 2]
        .iter()
        .map(|&k| g(&(Float::with_val(p, h * k) + x)))
        .collect::<Result<_>>()?;
    let d1 = (Complex::with_val(p, &v[0] - &v[4]) + Complex::with_val(p, &v[3] - &v[1]) * 8u32) / Float::with_val(p, h * 12u32);
    let hh = Float::with_val(p, h.square_ref());
    let d2 = (-Complex::with_val(p, &v[0] + &v[4]) + Complex::with_val(p, &v[1] + &v[3]) * 16u32 - Complex::with_val(p, &v[2] * 30u32))
        / (hh * 12u32);
    Ok((v[2].clone(), d1, d2))
}

/// Pointwise comparison of Hankel a_{k,n} with the trajectory, and the ODE
/// residual of the Hankel values themselves.
pub fn p3_verify(
    k: u32,
    weight: &WeightParams,
    traj: &P3Trajectory,
    t_grid: &[Float],
    spec: &QuadratureSpec,
) -> Result<Vec<P3VerifyPoint>> {
    let p = spec.prec;
    let pp = P3Params::new(k, weight.n)?;
    let h = crate::numkernel::pow2(p, -(p as i32) / 6);
    let mut out = vec![];
    for t in t_grid {
        let (a, d1, d2) = five_point(|tau| hankel_a(k, &weight.with_t(tau), spec), t, &h)?;
        let tc = cplx_of(t);
        let (a_ode, _) = traj.eval(&tc)?;
        let deviation = abs(&Complex::with_val(p, &a - &a_ode));
        let hankel_residual = ode_residual_normalised(&pp, &tc, &a, &d1, &d2);
        out.push(P3VerifyPoint { t: t.clone(), a_hankel: a, a_ode, deviation, hankel_residual });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct UTransformPoint {
    pub t: Float,
    pub s: Complex,
    pub u: Complex,
    /// u·(s a)/(−n t), identically 1
    pub roundtrip: Complex,
    pub residual: Float,
}

/// u(s) = −n t/(s a_{k,n}) and the residual of
/// u″ = u′²/u − u′/s + (4/s)(Θ₀u² + 1 − Θ∞) + 4u³ − 4/u,
/// with s-derivatives by the chain rule from t-differences at step `policy`.
pub fn u_transform_check(
    k: u32,
    weight: &WeightParams,
    t_grid: &[Float],
    spec: &QuadratureSpec,
    policy: &StepPolicy,
) -> Result<Vec<UTransformPoint>> {
    let p = spec.prec;
    let pp = P3Params::new(k, weight.n)?;
    let nf = Float::with_val(p, weight.n);
    let mut out = vec![];
    for t in t_grid {
        let u_of = |tau: &Complex| -> Result<Complex> {
            let a = hankel_a(k, &weight.with_t(tau.real()), spec)?;
            if abs(&a).to_f64() < 1e-30 {
                return Err(Error::DivisionNearZero(format!("a_k,n({}) ≈ 0", tau.real().to_f64())));
            }
            let s = pp.s(tau);
            Ok(-(Complex::with_val(p, tau * &nf) / (s * a)))
        };
        let tc = cplx_of(t);
        let u = u_of(&tc)?;
        let a = hankel_a(k, &weight.with_t(t), spec)?;
        let s = pp.s(&tc);
        let roundtrip = Complex::with_val(p, &u * &s) * &a / -(Complex::with_val(p, &tc * &nf));
        let (ut, utt) = finite_diff_orders(u_of, &tc, policy)?;
        // dt/ds = 2s/n²
        let n2 = Float::with_val(p, nf.square_ref());
        let dtds = Complex::with_val(p, &s * 2u32) / &n2;
        let us = Complex::with_val(p, &ut.value * &dtds);
        let uss = Complex::with_val(p, &utt.value * Complex::with_val(p, dtds.square_ref()))
            + Complex::with_val(p, &ut.value * 2u32) / &n2;
        let th0 = Float::with_val(p, pp.theta0());
        let thi = Float::with_val(p, pp.theta_inf());
        let u2 = Complex::with_val(p, u.square_ref());
        let mut rhs = Complex::with_val(p, us.square_ref()) / &u - Complex::with_val(p, &us / &s);
        let bracket = Complex::with_val(p, &u2 * &th0) + (Float::with_val(p, 1) - &thi);
        rhs += Complex::with_val(p, bracket * 4u32) / &s;
        rhs += Complex::with_val(p, &u2 * &u) * 4u32;
        rhs -= Complex::with_val(p, 4) / &u;
        let residual = rel_residual(&uss, &rhs);
        out.push(UTransformPoint { t: t.clone(), s, u, roundtrip, residual });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FirstIntegral {
    pub residual: Float,
    pub beta: Complex,
    pub y: YBoundaryData,
    pub derivatives: HankelDerivatives,
}

/// |n²β − n²t c q + H − k(k+n)| / (1 + |n²β|).
pub fn first_integral_check(k: u32, weight: &WeightParams, spec: &QuadratureSpec, policy: &StepPolicy) -> Result<FirstIntegral> {
    if k == 0 {
        return Err(Error::Domain("first integral needs k ≥ 1 (β_0 is undefined)".into()));
    }
    let p = spec.prec;
    let ku = k as usize;
    let tab = moments_for(ku, weight, spec)?;
    let rec = recurrence_table(ku, &tab)?;
    let y = y_boundary(ku, &rec, &tab)?;
    let beta = rec.entry(ku)?.beta.clone().unwrap();
    let der = hankel_derivatives(ku, weight, spec, policy)?;
    let n2 = Float::with_val(p, weight.n) * weight.n;
    let t = cplx_of(&weight.t);
    let lhs = Complex::with_val(p, &beta * &n2);
    let cq = Complex::with_val(p, &y.c_kn * &y.q_kn);
    let mut r = lhs.clone() - Complex::with_val(p, &t * cq) * &n2;
    r += &der.h.value;
    r -= k * (k + weight.n);
    let residual = abs(&r) / (abs(&lhs) + 1u32);
    Ok(FirstIntegral { residual, beta, y, derivatives: der })
}

pub type Mat2 = [[Complex; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let p = a[0][0].prec().0;
    let e = |i: usize, j: usize| Complex::with_val(p, &a[i][0] * &b[0][j]) + Complex::with_val(p, &a[i][1] * &b[1][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn mat_inv(a: &Mat2) -> Mat2 {
    let p = a[0][0].prec().0;
    let det = Complex::with_val(p, &a[0][0] * &a[1][1]) - Complex::with_val(p, &a[0][1] * &a[1][0]);
    [
        [Complex::with_val(p, &a[1][1] / &det), -Complex::with_val(p, &a[0][1] / &det)],
        [-Complex::with_val(p, &a[1][0] / &det), Complex::with_val(p, &a[0][0] / &det)],
    ]
}

fn mat_det(a: &Mat2) -> Complex {
    let p = a[0][0].prec().0;
    Complex::with_val(p, &a[0][0] * &a[1][1]) - Complex::with_val(p, &a[0][1] * &a[1][0])
}

fn mat_norm(a: &Mat2) -> Float {
    let p = a[0][0].prec().0;
    let mut s = Float::with_val(p, 0);
    for row in a {
        for x in row {
            s += Float::with_val(p, x.norm_ref());
        }
    }
    s.sqrt()
}

/// diag(x^e, x^{−e}) applied to the left as a scaling of rows.
fn sigma3_pow(x: &Complex, e: &Complex) -> (Complex, Complex) {
    let p = x.prec().0;
    let v = Complex::with_val(p, x.pow(e));
    let w = Complex::with_val(p, 1) / &v;
    (v, w)
}

#[derive(Clone, Debug)]
pub struct LaxData {
    pub s: Complex,
    pub a_m1: Mat2,
    pub a_m2: Mat2,
    pub trace_a_m1: Complex,
    pub det_a_m2: Complex,
    /// s²/4 = n² t/4
    pub det_expected: Complex,
    /// relative residual of Φ_λ Φ^{-1} against A(λ, s) at each λ
    pub samples: Vec<(Complex, Float)>,
}

/// Assembles A₋₁ and A₋₂ from γ², c_kn, q_kn and compares A(λ, s) with a
/// difference quotient of Φ(λ) = (ni/s)^{(n/2+k)σ₃} Y(sλ/(ni)) e^{(i/2)(sλ − s/λ)σ₃} (sλ/(ni))^{(n/2)σ₃}.
pub fn lax_check(k: u32, weight: &WeightParams, lambdas: &[Complex], spec: &QuadratureSpec) -> Result<LaxData> {
    if weight.t.is_zero() {
        return Err(Error::Domain("Lax pair needs t ≠ 0".into()));
    }
    if k == 0 {
        return Err(Error::Domain("Lax pair needs k ≥ 1".into()));
    }
    let p = spec.prec;
    let ku = k as usize;
    let n = weight.n;
    let pp = P3Params::new(k, n)?;
    let t = cplx_of(&weight.t);
    let s = pp.s(&t);
    let tab = moments_for(ku, weight, spec)?;
    let rec = recurrence_table(ku, &tab)?;
    let y0 = y_boundary(ku, &rec, &tab)?;
    let g2k = rec.entry(ku)?.gamma2.clone();
    let g2k1 = rec.entry(ku - 1)?.gamma2.clone();
    let tpi = crate::numkernel::two_pi_i(p);
    let ni = Complex::with_val(p, (0, n));
    let ratio = Complex::with_val(p, &ni / &s);
    let pw = crate::numkernel::powi(&ratio, n + 2 * k);
    let ipw = Complex::with_val(p, 1) / &pw;
    let half = Float::with_val(p, n + 2 * k) / 2u32;
    let nf = Float::with_val(p, n);
    let a_m1: Mat2 = [
        [cplx_of(&half), -(Complex::with_val(p, &nf / Complex::with_val(p, &tpi * &g2k)) * &pw)],
        [Complex::with_val(p, &tpi * &g2k1) * &nf * &ipw, -cplx_of(&half)],
    ];
    let cq = Complex::with_val(p, &y0.c_kn * &y0.q_kn);
    let one_m2cq = Complex::with_val(p, 1) - Complex::with_val(p, &cq * 2u32);
    let is2 = Complex::with_val(p, &s * Complex::with_val(p, (0, 1))) / 2u32;
    let a_m2: Mat2 = [
        [Complex::with_val(p, &is2 * &one_m2cq), Complex::with_val(p, &is2 * &y0.c_kn) * &pw * -2i32],
        [
            Complex::with_val(p, &is2 * &y0.q_kn) * (Complex::with_val(p, 1) - &cq) * &ipw * -2i32,
            -Complex::with_val(p, &is2 * &one_m2cq),
        ],
    ];
    let trace_a_m1 = Complex::with_val(p, &a_m1[0][0] + &a_m1[1][1]);
    let det_a_m2 = mat_det(&a_m2);
    let det_expected = Complex::with_val(p, s.square_ref()) / 4u32;

    let e_out = Complex::with_val(p, (&half, 0));
    let e_in = Complex::with_val(p, (Float::with_val(p, &nf / 2u32), 0));
    let phi = |lam: &Complex| -> Result<Mat2> {
        let z = Complex::with_val(p, &s * lam) / &ni;
        let y = y_matrix(&z, ku, &rec, weight, spec)?;
        let (l0, l1) = sigma3_pow(&ratio, &e_out);
        let ex = (Complex::with_val(p, &s * lam) - Complex::with_val(p, &s / lam)) * Complex::with_val(p, (0, 0.5f64));
        let ep = Complex::with_val(p, ex.exp_ref());
        let em = Complex::with_val(p, 1) / &ep;
        let (r0, r1) = sigma3_pow(&z, &e_in);
        let c0 = Complex::with_val(p, &ep * &r0);
        let c1 = Complex::with_val(p, &em * &r1);
        Ok([
            [Complex::with_val(p, &l0 * &y[0][0]) * &c0, Complex::with_val(p, &l0 * &y[0][1]) * &c1],
            [Complex::with_val(p, &l1 * &y[1][0]) * &c0, Complex::with_val(p, &l1 * &y[1][1]) * &c1],
        ])
    };
    let mut samples = vec![];
    // step along the direction that keeps z = sλ/(ni) moving parallel to the real axis
    let dir = Complex::with_val(p, &ratio / abs(&ratio));
    let policy = StepPolicy::for_precision(p);
    for lam in lambdas {
        let phi0 = phi(lam)?;
        let inv = mat_inv(&phi0);
        let mut dphi: Vec<Complex> = vec![];
        for idx in 0..4 {
            let (i, j) = (idx / 2, idx % 2);
            let d = finite_diff(
                |eps| {
                    let l = Complex::with_val(p, &dir * eps) + lam;
                    Ok(phi(&l)?[i][j].clone())
                },
                &Complex::new(p),
                1,
                &policy,
            )?;
            dphi.push(d.value / &dir);
        }
        let dm: Mat2 = [[dphi[0].clone(), dphi[1].clone()], [dphi[2].clone(), dphi[3].clone()]];
        let lhs = mat_mul(&dm, &inv);
        let l2 = Complex::with_val(p, lam.square_ref());
        let mut rhs: Mat2 = [[Complex::new(p), Complex::new(p)], [Complex::new(p), Complex::new(p)]];
        for i in 0..2 {
            for j in 0..2 {
                rhs[i][j] = Complex::with_val(p, &a_m1[i][j] / lam) + Complex::with_val(p, &a_m2[i][j] / &l2);
            }
        }
        rhs[0][0] += &is2;
        rhs[1][1] -= &is2;
        let mut diff = lhs.clone();
        for i in 0..2 {
            for j in 0..2 {
                diff[i][j] -= &rhs[i][j];
            }
        }
        let r = mat_norm(&diff) / (mat_norm(&rhs) + 1u32);
        samples.push((lam.clone(), r));
    }
    Ok(LaxData { s, a_m1, a_m2, trace_a_m1, det_a_m2, det_expected, samples })
}
