//! Painlevé I, y″ = 6y² + s: the tronquée asymptotic series on the negative
//! axis, Taylor integration with pole detection and the Hamiltonian
//! H = ½y′² − 2y³ − sy, and the double-scaling extraction of y and H from
//! finite-n recurrence data.

use crate::equilibrium::{g_and_l, solve_signed, CriticalConstants};
use crate::error::{Error, Result};
use crate::numkernel::ode::cauchy;
use crate::numkernel::{abs, cplx_of, ode_solve, Halt, OdeSpec, QuadratureSpec, SolutionGrid, TaylorField};
use crate::orthopoly::{moments_for, recurrence_range, y_boundary};
use crate::weight::{MomentTable, WeightParams};
use rug::ops::Pow;
use rug::{Complex, Float};

/// y₀(z) ~ √(−z/6) [1 + Σ_{k≥1} a_k (−z)^{−5k/2}], real for z < 0.
#[derive(Clone, Debug)]
pub struct TritronqueeSeries {
    pub order: usize,
    /// a_0 = 1, a_1, …, a_order
    pub coeffs: Vec<Float>,
}

#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub y: Float,
    pub dy: Float,
    /// magnitude of the first omitted term
    pub tail: Float,
    /// number of coefficients actually summed (optimal truncation may stop early)
    pub used: usize,
}

/// With x = −z and y = x^{1/2} F/√6, F = Σ a_k x^{−5k/2}, the equation reads
/// y_xx = x(F² − 1), so [F²]_j = e(e−1) a_{j−1}/√6 with e = 1/2 − 5(j−1)/2.
pub fn tritronquee_series(order: usize, prec: u32) -> Result<TritronqueeSeries> {
    if order < 1 {
        return Err(Error::Domain("series order must be at least 1".into()));
    }
    let c = Float::with_val(prec, 6u32).sqrt().recip();
    let mut a = vec![Float::with_val(prec, 1)];
    for j in 1..=order {
        let e = 0.5 - 2.5 * (j as f64 - 1.0);
        let lhs = Float::with_val(prec, &c * &a[j - 1]) * Float::with_val(prec, e * (e - 1.0));
        let mut cross = Float::with_val(prec, 0);
        for i in 1..j {
            cross += Float::with_val(prec, &a[i] * &a[j - i]);
        }
        a.push((lhs - cross) / 2u32);
    }
    Ok(TritronqueeSeries { order, coeffs: a })
}

impl TritronqueeSeries {
    fn exponent(k: usize) -> f64 {
        0.5 - 2.5 * k as f64
    }

    /// Sum up to the order or the smallest term, whichever comes first.
    pub fn eval(&self, z: &Float) -> Result<SeriesValue> {
        let p = z.prec();
        if !z.is_sign_negative() || z.is_zero() {
            return Err(Error::Domain("the series is evaluated on z < 0".into()));
        }
        let x = Float::with_val(p, -z);
        let c = Float::with_val(p, 6u32).sqrt().recip();
        let u = Float::with_val(p, &x).pow(-2.5f64);
        let mut y = Float::with_val(p, 0);
        let mut dydx = Float::with_val(p, 0);
        let mut up = Float::with_val(p, 1);
        let mut prev = Float::with_val(p, f64::INFINITY);
        let mut used = 0;
        let mut tail = Float::with_val(p, 0);
        for (k, ak) in self.coeffs.iter().enumerate() {
            let term = Float::with_val(p, ak * &up);
            let mag = Float::with_val(p, term.abs_ref());
            if k > 0 && mag > prev {
                tail = mag;
                break;
            }
            y += &term;
            dydx += Float::with_val(p, &term * Self::exponent(k)) / &x;
            prev = mag;
            used = k + 1;
            up *= &u;
            if k == self.order {
                // no term left to look at: bound the remainder by the last one
                tail = prev.clone();
            }
        }
        let scale = Float::with_val(p, &c * Float::with_val(p, x.sqrt_ref()));
        let y = Float::with_val(p, &y * &scale);
        let dy = -Float::with_val(p, &dydx * &scale);
        let tail = Float::with_val(p, &tail * &scale);
        Ok(SeriesValue { y, dy, tail, used })
    }

    /// As `eval`, with a DOMAIN error when the tail estimate exceeds tol.
    pub fn eval_checked(&self, z: &Float, tol: &Float) -> Result<SeriesValue> {
        let v = self.eval(z)?;
        if v.tail > *tol {
            return Err(Error::Domain(format!("series tail {:.3e} at z = {} exceeds tolerance", v.tail.to_f64(), z.to_f64())));
        }
        Ok(v)
    }

    /// |y″ − 6y² − z| / |z| for the full order-K truncation, all terms kept.
    pub fn plug_back_residual(&self, z: &Float) -> Float {
        let p = z.prec();
        let x = Float::with_val(p, -z);
        let c = Float::with_val(p, 6u32).sqrt().recip();
        let mut y = Float::with_val(p, 0);
        let mut yxx = Float::with_val(p, 0);
        for (k, ak) in self.coeffs.iter().enumerate() {
            let e = Self::exponent(k);
            let xe = Float::with_val(p, Float::with_val(p, &x).pow(e));
            y += Float::with_val(p, ak * &xe);
            yxx += Float::with_val(p, ak * &xe) * (e * (e - 1.0)) / Float::with_val(p, x.square_ref());
        }
        y *= &c;
        yxx *= &c;
        let r = yxx - Float::with_val(p, y.square_ref()) * 6u32 + &x;
        r.abs() / x
    }
}

/// y″ = 6y² + s about s0: c_{j+2} = (6[y²]_j + [s]_j) / ((j+2)(j+1)).
pub struct P1Field;

impl TaylorField for P1Field {
    fn order(&self) -> usize {
        2
    }

    fn coefficients(&self, s0: &Complex, state: &[Complex], terms: usize) -> Result<Vec<Complex>> {
        let p = s0.prec().0;
        let mut c: Vec<Complex> = vec![state[0].clone(), state[1].clone()];
        c.resize(terms.max(2), Complex::new(p));
        for j in 0..terms.saturating_sub(2) {
            let mut r = cauchy(&c, &c, j) * 6u32;
            match j {
                0 => r += s0,
                1 => r += 1u32,
                _ => {}
            }
            c[j + 2] = r / ((j as u32 + 2) * (j as u32 + 1));
        }
        c.truncate(terms);
        Ok(c)
    }
}

pub fn hamiltonian(s: &Complex, y: &Complex, dy: &Complex) -> Complex {
    let p = s.prec().0;
    let mut h = Complex::with_val(p, dy.square_ref()) / 2u32;
    h -= Complex::with_val(p, &Complex::with_val(p, y.square_ref()) * y) * 2u32;
    h -= Complex::with_val(p, s * y);
    h
}

#[derive(Clone, Debug)]
pub struct P1Point {
    pub s: Float,
    pub y: Complex,
    pub dy: Complex,
    pub h: Complex,
    /// |H′ + y| with H′ from the local Taylor polynomial
    pub h_residual: Float,
}

#[derive(Clone, Debug)]
pub struct PoleReport {
    pub estimate: Complex,
    pub reached: Complex,
}

#[derive(Clone, Debug)]
pub struct P1Solution {
    pub s_start: Float,
    pub initial: SeriesValue,
    pub points: Vec<P1Point>,
    pub trajectory: SolutionGrid,
    pub pole: Option<PoleReport>,
}

impl P1Solution {
    pub fn max_h_residual(&self) -> Float {
        let p = self.s_start.prec();
        self.points.iter().fold(Float::with_val(p, 0), |m, q| if q.h_residual > m { q.h_residual.clone() } else { m })
    }

    /// (y, y′) at s on the computed part of the path.
    pub fn eval(&self, s: &Float) -> Result<(Complex, Complex)> {
        let v = self
            .trajectory
            .eval(&cplx_of(s))
            .ok_or_else(|| Error::Domain(format!("s = {} outside the trajectory", s.to_f64())))?;
        Ok((v[0].clone(), v[1].clone()))
    }

    pub fn into_complete(self) -> Result<Self> {
        match &self.pole {
            Some(p) => Err(Error::PoleEncountered { location: p.estimate.clone(), reached: p.reached.clone() }),
            None => Ok(self),
        }
    }
}

#[derive(Clone, Debug)]
pub struct P1Spec {
    pub prec: u32,
    pub series_order: usize,
    /// largest acceptable series tail at s_start
    pub series_tol: f64,
    /// per-step Taylor error
    pub ode_tol: f64,
    /// spacing of the recorded (s, y, y′, H) samples
    pub sample_step: f64,
}

impl P1Spec {
    pub fn new(prec: u32) -> Self {
        P1Spec { prec, series_order: 200, series_tol: 1e-30, ode_tol: 2f64.powi(64 - prec as i32), sample_step: 0.25 }
    }
}

/// Launch from the series at s_start and integrate towards s_end. A pole on
/// the path stops the run; it is reported in `pole`, not as an error.
pub fn p1_solve(s_start: f64, s_end: f64, spec: &P1Spec) -> Result<P1Solution> {
    let p = spec.prec;
    let s0 = Float::with_val(p, s_start);
    let series = tritronquee_series(spec.series_order, p)?;
    let init = series.eval_checked(&s0, &Float::with_val(p, spec.series_tol))?;
    let mut ode = OdeSpec::new(p, spec.ode_tol);
    ode.pole_guard = Float::with_val(p, 0.05);
    let grid = ode_solve(&P1Field, &[cplx_of(&init.y), cplx_of(&init.dy)], &cplx_of(&s0), &Complex::with_val(p, s_end), &ode)?;
    let pole = match &grid.halt {
        Some(Halt::Pole { estimate, reached }) => Some(PoleReport { estimate: estimate.clone(), reached: reached.clone() }),
        None => None,
    };
    let reached = grid.end.real().to_f64();
    let dir = if s_end >= s_start { 1.0 } else { -1.0 };
    let mut points = vec![];
    let mut k = 0usize;
    loop {
        let s = s_start + dir * spec.sample_step * k as f64;
        if (s - reached) * dir > 1e-12 {
            break;
        }
        let sf = Float::with_val(p, s);
        let sc = cplx_of(&sf);
        let v = match grid.eval(&sc) {
            Some(v) => v,
            None => break,
        };
        let h = hamiltonian(&sc, &v[0], &v[1]);
        // H′ = y′y″ − 6y²y′ − y − s y′
        let mut dh = Complex::with_val(p, &v[1] * &v[2]);
        dh -= Complex::with_val(p, Complex::with_val(p, v[0].square_ref()) * &v[1]) * 6u32;
        dh -= &v[0];
        dh -= Complex::with_val(p, &sc * &v[1]);
        let h_residual = abs(&(dh + &v[0]));
        points.push(P1Point { s: sf, y: v[0].clone(), dy: v[1].clone(), h, h_residual });
        k += 1;
    }
    Ok(P1Solution { s_start: s0, initial: init, points, trajectory: grid, pole })
}

/// max |y₁ − y₂| over the sample points of `a` that lie in [lo, hi].
pub fn overlap_deviation(a: &P1Solution, b: &P1Solution, lo: f64, hi: f64) -> Result<Float> {
    let p = a.s_start.prec();
    let mut m = Float::with_val(p, 0);
    for q in a.points.iter().filter(|q| q.s >= lo && q.s <= hi) {
        let (y, _) = b.eval(&q.s)?;
        let d = abs(&Complex::with_val(p, &q.y - &y));
        if d > m {
            m = d;
        }
    }
    Ok(m)
}

// ------------------------------------------------------------- double scaling

/// s* = K n^{4/5} (t_cr − t).
pub fn s_star(n: u32, t: &Float, cc: &CriticalConstants) -> Float {
    let p = t.prec();
    let n45 = Float::with_val(p, &n).pow(Float::with_val(p, 0.8f64));
    cc.scaling_constant() * n45 * Float::with_val(p, &cc.t_cr - t)
}

/// Inverse of `s_star` at fixed n.
pub fn t_for_s_star(n: u32, s: &Float, cc: &CriticalConstants) -> Float {
    let p = s.prec();
    let n45 = Float::with_val(p, &n).pow(Float::with_val(p, 0.8f64));
    Float::with_val(p, &cc.t_cr - Float::with_val(p, s / (cc.scaling_constant() * n45)))
}

/// The finite-n quantities the extraction inverts.
#[derive(Clone, Debug, Default)]
pub struct FiniteNInputs {
    pub beta: Option<Complex>,
    pub a_nn: Option<Complex>,
    pub dh_dt: Option<Complex>,
    pub gamma2: Option<Complex>,
    /// Lagrange constant of the signed measure at t
    pub l: Option<Float>,
}

#[derive(Clone, Debug)]
pub struct ExtractionRecord {
    pub n: u32,
    pub t: Float,
    pub s_star: Float,
    pub y_beta: Option<Complex>,
    pub y_a: Option<Complex>,
    pub y_dh: Option<Complex>,
    pub h_gamma: Option<Complex>,
    pub inputs: FiniteNInputs,
}

impl ExtractionRecord {
    pub fn y_sources(&self) -> Vec<(&'static str, &Complex)> {
        let mut v = vec![];
        if let Some(y) = &self.y_beta {
            v.push(("beta", y));
        }
        if let Some(y) = &self.y_a {
            v.push(("a_nn", y));
        }
        if let Some(y) = &self.y_dh {
            v.push(("dH", y));
        }
        v
    }
}

/// The leading terms and first corrections, as functions of (y, H).
#[derive(Clone, Debug)]
pub struct ScalingModel {
    pub n: u32,
    pub t: Float,
    pub beta0: Float,
    pub beta1: Float,
    pub a0: Float,
    pub a1: Float,
    pub dh0: Float,
    pub dh1: Float,
    pub gamma0: Float,
    pub gamma1: Float,
}

impl ScalingModel {
    /// β ≈ β0 − β1 y, a ≈ a0 (1 − a1 y), dH/dt ≈ dh0 + dh1 y,
    /// γ² e^{nl} ≈ gamma0 (1 + gamma1 H).
    pub fn new(n: u32, t: &Float, cc: &CriticalConstants) -> Self {
        let p = t.prec();
        let (a, b) = (&cc.a_cr, &cc.b_cr);
        let f = |x: f64| Float::with_val(p, x);
        let nf = Float::with_val(p, n);
        let n25 = Float::with_val(p, Float::with_val(p, &nf).pow(0.4f64));
        let n15 = Float::with_val(p, Float::with_val(p, &nf).pow(0.2f64));
        let bma = Float::with_val(p, b - a);
        let two_a = Float::with_val(p, a * 2u32);
        let sab = Float::with_val(p, a * b).sqrt();
        let beta0 = Float::with_val(p, bma.square_ref()) / 16u32;
        let beta1 = Float::with_val(p, Float::with_val(p, &two_a * &bma).pow(f(0.8))) / 4u32 / &n25;
        let a0 = Float::with_val(p, t / &sab);
        let a1 = Float::with_val(p, f(2.0).pow(f(0.8)))
            / (Float::with_val(p, Float::with_val(p, a).pow(0.2f64)) * Float::with_val(p, Float::with_val(p, &bma).pow(0.2f64)) * &n25);
        let n2 = Float::with_val(p, nf.square_ref());
        let lead = Float::with_val(p, a / b).sqrt() + Float::with_val(p, b / a).sqrt() - 2u32;
        let dh0 = -Float::with_val(p, &n2 * &lead) / 4u32;
        let c = Float::with_val(p, Float::with_val(p, &bma).pow(0.8f64)) * 2u32 / (Float::with_val(p, Float::with_val(p, &two_a).pow(0.2f64)) * &sab);
        let dh1 = Float::with_val(p, &n2 * &c) / 4u32 / &n25;
        let gamma0 = Float::with_val(p, 2u32) / (crate::numkernel::pi(p) * &bma);
        let gamma1 = Float::with_val(p, Float::with_val(p, &two_a).pow(0.8f64)) * 2u32 / (Float::with_val(p, Float::with_val(p, &bma).pow(0.2f64)) * n15);
        ScalingModel { n, t: t.clone(), beta0, beta1, a0, a1, dh0, dh1, gamma0, gamma1 }
    }

    pub fn beta(&self, y: &Complex) -> Complex {
        let p = y.prec().0;
        cplx_of(&self.beta0) - Complex::with_val(p, y * &self.beta1)
    }

    pub fn a_nn(&self, y: &Complex) -> Complex {
        let p = y.prec().0;
        (Complex::with_val(p, 1) - Complex::with_val(p, y * &self.a1)) * &self.a0
    }

    pub fn dh_dt(&self, y: &Complex) -> Complex {
        let p = y.prec().0;
        cplx_of(&self.dh0) + Complex::with_val(p, y * &self.dh1)
    }

    /// γ² e^{nl}
    pub fn gamma2_scaled(&self, h: &Complex) -> Complex {
        let p = h.prec().0;
        (Complex::with_val(p, 1) + Complex::with_val(p, h * &self.gamma1)) * &self.gamma0
    }

    pub fn y_from_beta(&self, beta: &Complex) -> Complex {
        let p = beta.prec().0;
        (cplx_of(&self.beta0) - beta) / &Float::with_val(p, &self.beta1)
    }

    pub fn y_from_a(&self, a_nn: &Complex) -> Result<Complex> {
        let p = a_nn.prec().0;
        if self.a0.is_zero() {
            return Err(Error::DivisionNearZero("a_{n,n} leading term vanishes at t = 0".into()));
        }
        Ok((Complex::with_val(p, 1) - Complex::with_val(p, a_nn / &self.a0)) / &self.a1)
    }

    pub fn y_from_dh(&self, dh: &Complex) -> Complex {
        (Complex::with_val(dh.prec().0, dh - &self.dh0)) / &self.dh1
    }

    /// H from γ² given the Lagrange constant l.
    pub fn h_from_gamma2(&self, gamma2: &Complex, l: &Float) -> Complex {
        let p = gamma2.prec().0;
        let enl = Float::with_val(p, l * self.n).exp();
        let r = Complex::with_val(p, gamma2 * &enl) / &self.gamma0;
        (r - 1u32) / &self.gamma1
    }
}

/// Invert each leading-plus-first-correction formula at (n, t).
pub fn extract_suite(n: u32, t: &Float, inputs: &FiniteNInputs, cc: &CriticalConstants) -> Result<ExtractionRecord> {
    if inputs.beta.is_none() && inputs.a_nn.is_none() && inputs.dh_dt.is_none() && inputs.gamma2.is_none() {
        return Err(Error::Domain("no finite-n inputs given".into()));
    }
    let model = ScalingModel::new(n, t, cc);
    let h_gamma = match (&inputs.gamma2, &inputs.l) {
        (Some(g), Some(l)) => Some(model.h_from_gamma2(g, l)),
        (Some(_), None) => return Err(Error::Domain("γ² given without the Lagrange constant l".into())),
        _ => None,
    };
    Ok(ExtractionRecord {
        n,
        t: t.clone(),
        s_star: s_star(n, t, cc),
        y_beta: inputs.beta.as_ref().map(|b| model.y_from_beta(b)),
        y_a: inputs.a_nn.as_ref().map(|a| model.y_from_a(a)).transpose()?,
        y_dh: inputs.dh_dt.as_ref().map(|d| model.y_from_dh(d)),
        h_gamma,
        inputs: inputs.clone(),
    })
}

/// β_{n,n}, a_{n,n}, γ²_{n,n} and dH_{n,n}/dt (via −n² Y₁₂(0) Y₂₁(0)) from one
/// moment table, plus l from the signed measure.
pub fn finite_n_inputs(weight: &WeightParams, spec: &QuadratureSpec) -> Result<FiniteNInputs> {
    let tab = moments_for(weight.n as usize, weight, spec)?;
    finite_n_inputs_from(&tab, spec)
}

/// As `finite_n_inputs`, from a table covering μ_{−1}..μ_{2n+1}.
pub fn finite_n_inputs_from(tab: &MomentTable, spec: &QuadratureSpec) -> Result<FiniteNInputs> {
    let p = spec.prec;
    let weight = &tab.params;
    let n = weight.n as usize;
    let rec = recurrence_range(n, n, tab)?;
    let e = rec.entry(n)?;
    let y = y_boundary(n, &rec, tab)?;
    let n2 = Float::with_val(p, weight.n) * weight.n;
    let dh_dt = -(Complex::with_val(p, &y.y12 * &y.y21) * &n2);
    // l enters through e^{nl}; 512 bits is ample for it
    let pl = p.min(512);
    let signed = solve_signed(&Float::with_val(pl, &weight.t))?;
    let (_, lag) = g_and_l(&signed, &QuadratureSpec::new(pl))?;
    Ok(FiniteNInputs {
        beta: e.beta.clone(),
        a_nn: Some(e.a.clone()),
        dh_dt: Some(dh_dt),
        gamma2: Some(e.gamma2.clone()),
        l: Some(Float::with_val(p, &lag.l)),
    })
}

/// Working precision for the degree-n extraction: the moment matrix loses
/// roughly 8n bits to cancellation, so 32n bits (at least 512) keeps a wide margin.
pub fn ds_precision(n: u32) -> u32 {
    (32 * n).max(512)
}

/// Extraction at (n, s*) for the weight with contour constant α.
pub fn extract_at(n: u32, s: f64, alpha: f64, prec: u32) -> Result<ExtractionRecord> {
    let cc = crate::equilibrium::critical_constants(prec);
    let t = t_for_s_star(n, &Float::with_val(prec, s), &cc);
    let mut weight = WeightParams::new(n, 0.0, alpha, prec);
    weight.t = t.clone();
    let inputs = finite_n_inputs(&weight, &QuadratureSpec::new(prec))?;
    extract_suite(n, &t, &inputs, &cc)
}

#[derive(Clone, Debug)]
pub struct ConsistencyPoint {
    pub s_star: Float,
    pub y: Complex,
    pub pole_suspect: bool,
    pub spread_a: Option<Float>,
    pub spread_dh: Option<Float>,
    /// |y″ − 6y² − s*| by central differences on the s*-grid
    pub pi_residual: Option<Float>,
    /// |H′ + y| by central differences
    pub h_residual: Option<Float>,
}

#[derive(Clone, Debug)]
pub struct NConsistency {
    pub n: u32,
    pub points: Vec<ConsistencyPoint>,
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub per_n: Vec<NConsistency>,
    /// for consecutive n: fraction of grid points where the β–a spread decreased
    pub spread_trend: Vec<(u32, u32, usize, usize)>,
}

impl ConsistencyReport {
    pub fn has_pole_suspects(&self) -> bool {
        self.per_n.iter().any(|r| r.points.iter().any(|q| q.pole_suspect))
    }
}

fn cabs_diff(a: &Complex, b: &Complex) -> Float {
    abs(&Complex::with_val(a.prec().0, a - b))
}

/// Cross-source spreads and the PI / Hamiltonian residuals of the extracted
/// data. Records for each n must sit on one uniform s*-grid in increasing
/// order; `y` is taken from the β source. Points with |y| > `pole_cap` are
/// flagged and kept out of the difference stencils.
pub fn pi_consistency_check(records: &[Vec<ExtractionRecord>], pole_cap: f64) -> Result<ConsistencyReport> {
    let mut per_n = vec![];
    for recs in records {
        if recs.is_empty() {
            continue;
        }
        let n = recs[0].n;
        let p = recs[0].t.prec();
        let ys: Vec<Complex> = recs
            .iter()
            .map(|r| r.y_beta.clone().ok_or_else(|| Error::Domain("β source missing".into())))
            .collect::<Result<_>>()?;
        let flagged: Vec<bool> = ys.iter().map(|y| abs(y).to_f64() > pole_cap).collect();
        let m = recs.len();
        let mut points = vec![];
        for i in 0..m {
            let r = &recs[i];
            let spread_a = r.y_a.as_ref().map(|y| cabs_diff(&ys[i], y));
            let spread_dh = r.y_dh.as_ref().map(|y| cabs_diff(&ys[i], y));
            let mut pi_residual = None;
            let mut h_residual = None;
            if i > 0 && i + 1 < m && !flagged[i - 1] && !flagged[i] && !flagged[i + 1] {
                let h = Float::with_val(p, &recs[i + 1].s_star - &recs[i - 1].s_star) / 2u32;
                let h2 = Float::with_val(p, h.square_ref());
                let d2 = (Complex::with_val(p, &ys[i + 1] + &ys[i - 1]) - Complex::with_val(p, &ys[i] * 2u32)) / &h2;
                let rhs = Complex::with_val(p, ys[i].square_ref()) * 6u32 + &r.s_star;
                pi_residual = Some(cabs_diff(&d2, &rhs));
                if let (Some(hp), Some(hm)) = (&recs[i + 1].h_gamma, &recs[i - 1].h_gamma) {
                    let dh = Complex::with_val(p, hp - hm) / Float::with_val(p, &h * 2u32);
                    h_residual = Some(abs(&(dh + &ys[i])));
                }
            }
            points.push(ConsistencyPoint {
                s_star: r.s_star.clone(),
                y: ys[i].clone(),
                pole_suspect: flagged[i],
                spread_a,
                spread_dh,
                pi_residual,
                h_residual,
            });
        }
        per_n.push(NConsistency { n, points });
    }
    let mut spread_trend = vec![];
    for w in per_n.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let mut better = 0;
        let mut total = 0;
        for (x, y) in lo.points.iter().zip(hi.points.iter()) {
            if let (Some(a), Some(b)) = (&x.spread_a, &y.spread_a) {
                total += 1;
                if b < a {
                    better += 1;
                }
            }
        }
        spread_trend.push((lo.n, hi.n, better, total));
    }
    Ok(ConsistencyReport { per_n, spread_trend })
}
