//! Adaptive quadrature along a single path segment.
//!
//! Gauss–Legendre panels (order N against 2N, error of the 2N rule taken as
//! the square of the difference relative to the panel scale) by default; tanh–sinh when the
//! spec carries an endpoint-singularity hint.

use super::path::PathSegment;
use super::{abs, abs_l1, pi, pow2};
use crate::error::{Error, Result};
use rug::{Complex, Float};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Debug, PartialEq)]
pub enum EndpointHint {
    None,
    /// Integrand behaves like |z − endpoint|^exponent at one or both ends.
    Algebraic(f64),
}

#[derive(Clone, Debug)]
pub struct QuadratureSpec {
    pub prec: u32,
    pub abs_tol: Float,
    pub rel_tol: Float,
    pub max_depth: u32,
    pub hint: EndpointHint,
    /// Gauss–Legendre base order; derived from the precision when None.
    pub order: Option<usize>,
}

impl QuadratureSpec {
    pub fn new(prec: u32) -> Self {
        QuadratureSpec {
            prec,
            abs_tol: pow2(prec, -(prec as i32)),
            rel_tol: pow2(prec, -(prec as i32 - 24)),
            max_depth: 40,
            hint: EndpointHint::None,
            order: None,
        }
    }

    pub fn with_tol(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = Float::with_val(self.prec, abs_tol);
        self.rel_tol = Float::with_val(self.prec, rel_tol);
        self
    }

    pub fn with_hint(mut self, hint: EndpointHint) -> Self {
        self.hint = hint;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0) || !(self.rel_tol > 0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::Domain("quadrature depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn gl_order(&self) -> usize {
        self.order.unwrap_or_else(|| ((self.prec as usize) / 10).clamp(12, 160))
    }
}

/// Integrate a scalar function along `seg`. Returns (value, error estimate).
pub fn quad_segment<F>(mut f: F, seg: &PathSegment, spec: &QuadratureSpec) -> Result<(Complex, Float)>
where
    F: FnMut(&Complex) -> Complex,
{
    let (v, e) = quad_segment_vec(|z| Ok(vec![f(z)]), seg, spec, None)?;
    Ok((v.into_iter().next().unwrap(), e.into_iter().next().unwrap()))
}

/// Vector-valued variant: all components share nodes; each must meet
/// max(abs_floor[c] (or abs_tol), rel_tol·|value_c|).
pub fn quad_segment_vec<F>(
    mut f: F,
    seg: &PathSegment,
    spec: &QuadratureSpec,
    abs_floor: Option<&[Float]>,
) -> Result<(Vec<Complex>, Vec<Float>)>
where
    F: FnMut(&Complex) -> Result<Vec<Complex>>,
{
    spec.validate()?;
    let (mut v, e) = match spec.hint {
        EndpointHint::None => gauss_legendre(&mut f, seg, spec, abs_floor)?,
        EndpointHint::Algebraic(_) => tanh_sinh(&mut f, seg, spec, abs_floor)?,
    };
    if seg.reversed {
        for x in v.iter_mut() {
            x.neg_assign_exact();
        }
    }
    Ok((v, e))
}

trait NegExact {
    fn neg_assign_exact(&mut self);
}

impl NegExact for Complex {
    fn neg_assign_exact(&mut self) {
        let t = std::mem::replace(self, Complex::new(2));
        *self = -t;
    }
}

fn tolerance(spec: &QuadratureSpec, abs_floor: Option<&[Float]>, c: usize, total: &Complex) -> Float {
    let rel = Float::with_val(spec.prec, &spec.rel_tol * abs(total));
    let a = match abs_floor {
        Some(fl) => fl[c].clone(),
        None => spec.abs_tol.clone(),
    };
    if rel > a { rel } else { a }
}

// ---------------------------------------------------------------- Gauss–Legendre

pub(crate) struct GlRule {
    pub x: Vec<Float>,
    pub w: Vec<Float>,
}

type RuleCache = Mutex<HashMap<(usize, u32), Arc<GlRule>>>;

fn rule_cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Legendre P_n(x) and P_{n-1}(x).
fn legendre(n: usize, x: &Float) -> (Float, Float) {
    let p = x.prec();
    let mut p0 = Float::with_val(p, 1);
    let mut p1 = x.clone();
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) x P_k − k P_{k−1}
        let mut nx = Float::with_val(p, x * &p1);
        nx *= (2 * k + 1) as u32;
        nx -= Float::with_val(p, &p0 * k as u32);
        nx /= (k + 1) as u32;
        p0 = std::mem::replace(&mut p1, nx);
    }
    (p1, p0)
}

fn newton_node(n: usize, x: &mut Float) {
    let p = x.prec();
    let (pn, pn1) = legendre(n, x);
    // P_n' = n (x P_n − P_{n−1}) / (x² − 1)
    let x2m1 = Float::with_val(p, x.square_ref()) - 1u32;
    let dp = (Float::with_val(p, &*x * &pn) - pn1) * n as u32 / x2m1;
    *x -= pn / dp;
}

pub(crate) fn gl_rule(n: usize, prec: u32) -> Arc<GlRule> {
    if let Some(r) = rule_cache().lock().unwrap().get(&(n, prec)) {
        return r.clone();
    }
    let work = prec + 32;
    let half = n / 2;
    let mut xs: Vec<Float> = Vec::with_capacity(half + 1);
    for i in 1..=(n + 1) / 2 {
        let theta = std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5);
        let mut g = theta.cos();
        for _ in 0..8 {
            // f64 Newton
            let (mut a, mut b) = (1.0f64, g);
            for k in 1..n {
                let c = ((2 * k + 1) as f64 * g * b - k as f64 * a) / (k + 1) as f64;
                a = b;
                b = c;
            }
            let d = n as f64 * (g * b - a) / (g * g - 1.0);
            g -= b / d;
        }
        let mut p = 64u32;
        let mut x = Float::with_val(p, g);
        while p < work {
            p = (2 * p).min(work);
            x.set_prec(p);
            newton_node(n, &mut x);
        }
        newton_node(n, &mut x);
        xs.push(x);
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let weight_of = |x: &Float| {
        let (pn, pn1) = legendre(n, x);
        let x2m1 = Float::with_val(work, x.square_ref()) - 1u32;
        let _ = pn1.clone();
        let dp = (Float::with_val(work, x * &pn) - pn1) * n as u32 / &x2m1;
        // w = 2 / ((1 − x²) P_n'²)
        let den = -x2m1 * dp.square();
        Float::with_val(prec, 2u32 / den)
    };
    // ascending order: negative nodes first
    let mut pos: Vec<(Float, Float)> = xs.iter().map(|x| (x.clone(), weight_of(x))).collect();
    if n % 2 == 1 {
        // middle node is exactly 0
        let last = pos.len() - 1;
        pos[last].0 = Float::with_val(work, 0);
        let w = weight_of(&pos[last].0);
        pos[last].1 = w;
    }
    for (x, w) in pos.iter() {
        nodes.push(Float::with_val(prec, -x));
        weights.push(w.clone());
    }
    let mid = if n % 2 == 1 { pos.len() - 1 } else { pos.len() };
    for (x, w) in pos[..mid].iter().rev() {
        nodes.push(Float::with_val(prec, x));
        weights.push(w.clone());
    }
    if n % 2 == 1 {
        // the loop above pushed −0 for the middle node; fix its sign
        nodes[half] = Float::with_val(prec, 0);
    }
    let rule = Arc::new(GlRule { x: nodes, w: weights });
    rule_cache().lock().unwrap().insert((n, prec), rule.clone());
    rule
}

struct Panel {
    u0: Float,
    u1: Float,
    depth: u32,
    val: Vec<Complex>,
    err: Vec<Float>,
}

fn apply_rule<F>(f: &mut F, seg: &PathSegment, rule: &GlRule, u0: &Float, u1: &Float, prec: u32) -> Result<(Vec<Complex>, Float)>
where
    F: FnMut(&Complex) -> Result<Vec<Complex>>,
{
    let mid = Float::with_val(prec, u0 + u1) / 2u32;
    let half = Float::with_val(prec, u1 - u0) / 2u32;
    let mut acc: Vec<Complex> = Vec::new();
    let mut mag = Float::with_val(prec, 0);
    for (x, w) in rule.x.iter().zip(rule.w.iter()) {
        let u = Float::with_val(prec, &half * x) + &mid;
        let (z, dz) = seg.point(&u, None);
        let vals = f(&z)?;
        let scale = dz * Float::with_val(prec, w * &half);
        if acc.is_empty() {
            acc = vec![Complex::new(prec); vals.len()];
        }
        for (a, v) in acc.iter_mut().zip(vals.into_iter()) {
            let term = v * &scale;
            mag += abs_l1(&term);
            *a += term;
        }
    }
    Ok((acc, mag))
}

fn gauss_legendre<F>(
    f: &mut F,
    seg: &PathSegment,
    spec: &QuadratureSpec,
    abs_floor: Option<&[Float]>,
) -> Result<(Vec<Complex>, Vec<Float>)>
where
    F: FnMut(&Complex) -> Result<Vec<Complex>>,
{
    let prec = spec.prec;
    let n = spec.gl_order();
    let lo = gl_rule(n, prec);
    let hi = gl_rule(2 * n, prec);
    let noise_bits = -(prec as i32) + 12 + (usize::BITS - n.leading_zeros()) as i32;
    let mut eval = |u0: Float, u1: Float, depth: u32| -> Result<Panel> {
        let (a, _) = apply_rule(f, seg, &lo, &u0, &u1, prec)?;
        let (b, mag) = apply_rule(f, seg, &hi, &u0, &u1, prec)?;
        let noise = Float::with_val(prec, &mag * pow2(prec, noise_bits));
        let err = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| {
                // geometric convergence: err(2N) ≈ err(N)²/scale
                let d = abs(&Complex::with_val(prec, x - y));
                if d <= noise {
                    return Float::with_val(prec, 0);
                }
                let sq = Float::with_val(prec, d.square_ref()) / &mag;
                let est = if sq > noise { sq } else { noise.clone() };
                if est < d { est } else { d }
            })
            .collect();
        Ok(Panel { u0, u1, depth, val: b, err })
    };
    let mut panels = vec![eval(Float::with_val(prec, -1), Float::with_val(prec, 1), 0)?];
    loop {
        let m = panels[0].val.len();
        let mut total = vec![Complex::new(prec); m];
        let mut terr = vec![Float::new(prec); m];
        for p in panels.iter() {
            for c in 0..m {
                total[c] += &p.val[c];
                terr[c] += &p.err[c];
            }
        }
        let tols: Vec<Float> = (0..m).map(|c| tolerance(spec, abs_floor, c, &total[c])).collect();
        if (0..m).all(|c| terr[c] <= tols[c]) {
            return Ok((total, terr));
        }
        // worst panel by tolerance-relative error, first in path order on ties
        let mut worst = 0usize;
        let mut worst_r = -1.0f64;
        for (i, p) in panels.iter().enumerate() {
            let r = (0..m)
                .map(|c| Float::with_val(53, &p.err[c] / &tols[c]).to_f64())
                .fold(0.0f64, f64::max);
            if r > worst_r {
                worst_r = r;
                worst = i;
            }
        }
        let p = panels.remove(worst);
        if p.depth >= spec.max_depth {
            let e = (0..m)
                .map(|c| Float::with_val(53, &terr[c] / &tols[c]).to_f64() * tols[c].to_f64())
                .fold(0.0f64, f64::max);
            return Err(Error::NonConvergence { err_est: e });
        }
        let mid = Float::with_val(prec, &p.u0 + &p.u1) / 2u32;
        let left = eval(p.u0, mid.clone(), p.depth + 1)?;
        let right = eval(mid, p.u1, p.depth + 1)?;
        panels.insert(worst, right);
        panels.insert(worst, left);
    }
}

// ---------------------------------------------------------------- tanh–sinh

fn tanh_sinh<F>(
    f: &mut F,
    seg: &PathSegment,
    spec: &QuadratureSpec,
    abs_floor: Option<&[Float]>,
) -> Result<(Vec<Complex>, Vec<Float>)>
where
    F: FnMut(&Complex) -> Result<Vec<Complex>>,
{
    let prec = spec.prec;
    let halfpi = pi(prec) / 2u32;
    // nodes reach within 2^{-2P} of the endpoints
    let umax = f64::from(prec) * std::f64::consts::LN_2;
    let tmax = (umax / std::f64::consts::FRAC_PI_2).asinh();
    let max_level = spec.max_depth.min(24);

    // contribution of the node at τ (weight without the step h); None when the
    // node sits closer to an endpoint than the working precision resolves
    let mut node = |tau: &Float| -> Result<Option<Vec<Complex>>> {
        let sh = Float::with_val(prec, tau.sinh_ref());
        let ch = Float::with_val(prec, tau.cosh_ref());
        let u = Float::with_val(prec, &halfpi * &sh);
        let cu = Float::with_val(prec, u.cosh_ref());
        let w = Float::with_val(prec, &halfpi * &ch) / Float::with_val(prec, cu.square_ref());
        let (z, dz) = if tau.is_zero() {
            seg.point(&Float::with_val(prec, 0), None)
        } else {
            let ua = Float::with_val(prec, u.abs_ref());
            // complement 1 − tanh|u| = 1/(e^{|u|} cosh u)
            let comp = Float::with_val(prec, 1u32) / (Float::with_val(prec, ua.exp_ref()) * &cu);
            let x = if u > 0 { Float::with_val(prec, 1u32 - &comp) } else { Float::with_val(prec, &comp - 1u32) };
            seg.point(&x, Some((&comp, u > 0)))
        };
        let v = f(&z)?;
        if v.iter().any(|x| !super::is_finite(x)) {
            return Ok(None);
        }
        Ok(Some(v.into_iter().map(|x| x * &dz * &w).collect()))
    };

    let mut sum: Vec<Complex> = Vec::new();
    // largest |term| among the outermost nodes: the truncation floor
    let mut edge = Float::with_val(prec, 0);
    let add = |sum: &mut Vec<Complex>, edge: &mut Float, v: Vec<Complex>, outer: bool, h: &Float| {
        if outer {
            for x in v.iter() {
                let a = abs(x) * h;
                if a > *edge {
                    *edge = a;
                }
            }
        }
        if sum.is_empty() {
            *sum = v;
        } else {
            for (s, x) in sum.iter_mut().zip(v.into_iter()) {
                *s += x;
            }
        }
    };
    let edge_start = tmax * 0.9;
    let one = Float::with_val(prec, 1);
    let kmax0 = tmax.floor() as i64;
    for k in -kmax0..=kmax0 {
        if let Some(v) = node(&Float::with_val(prec, k))? {
            add(&mut sum, &mut edge, v, (k as f64).abs() > edge_start, &one);
        }
    }
    let mut h = Float::with_val(prec, 1);
    let mut prev: Vec<Complex> = sum.clone();
    let mut last_err: Vec<Float> = vec![];
    for level in 1..=max_level {
        h /= 2u32;
        let kmax = (tmax * f64::from(1u32 << level)).floor() as i64;
        let mut k = -kmax;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= kmax {
            let tau = Float::with_val(prec, &h * k);
            if let Some(v) = node(&tau)? {
                let outer = tau.to_f64().abs() > edge_start;
                add(&mut sum, &mut edge, v, outer, &h);
            }
            k += 2;
        }
        let cur: Vec<Complex> = sum.iter().map(|s| Complex::with_val(prec, s * &h)).collect();
        let floor = Float::with_val(prec, &edge * 16u32);
        let errs: Vec<Float> = cur
            .iter()
            .zip(prev.iter())
            .map(|(a, b)| abs(&Complex::with_val(prec, a - b)) + &floor)
            .collect();
        let ok = (0..cur.len()).all(|c| errs[c] <= Float::with_val(prec, tolerance(spec, abs_floor, c, &cur[c]) + Float::with_val(prec, &floor * 2u32)));
        if ok && level >= 3 {
            return Ok((cur, errs));
        }
        // rounding floor: differences stuck at the noise level count as converged
        if level >= 6 {
            let floor_ok = (0..cur.len()).all(|c| {
                let n = Float::with_val(prec, abs(&cur[c]) * pow2(prec, -(prec as i32) + 16));
                errs[c] <= Float::with_val(prec, &n + Float::with_val(prec, &floor * 2u32))
            });
            if floor_ok {
                return Ok((cur, errs));
            }
        }
        last_err = errs;
        prev = cur;
    }
    let e = last_err.iter().map(|x| x.to_f64()).fold(0.0f64, f64::max);
    Err(Error::NonConvergence { err_est: e })
}
