//! Adaptive Taylor-series integration along a straight path in the complex
//! plane. The right-hand side supplies its own coefficient recurrence.

use super::{abs, log10_float};
use crate::error::{Error, Result};
use rug::ops::Pow;
use rug::{Complex, Float};

/// A scalar ODE y^{(d)} = F(s, y, …, y^{(d−1)}) that can produce the Taylor
/// coefficients of its solution about any regular point.
pub trait TaylorField {
    fn order(&self) -> usize;
    /// Coefficients c_0..c_{terms−1} of y about s0, given y, y′, … at s0.
    fn coefficients(&self, s0: &Complex, state: &[Complex], terms: usize) -> Result<Vec<Complex>>;
}

#[derive(Clone, Debug)]
pub struct OdeSpec {
    pub prec: u32,
    /// local error per step relative to max(1, |y|)
    pub tol: Float,
    pub terms: usize,
    /// halt when the estimated pole ahead is closer than this
    pub pole_guard: Float,
    pub h_min: Float,
    pub max_steps: usize,
}

impl OdeSpec {
    pub fn new(prec: u32, tol: f64) -> Self {
        let t = Float::with_val(prec, tol);
        Self::with_tol(prec, t)
    }

    pub fn with_tol(prec: u32, tol: Float) -> Self {
        let digits = -log10_float(&tol);
        let terms = ((digits * 0.9) as usize + 12).max(16);
        OdeSpec {
            prec,
            tol,
            terms,
            pole_guard: Float::with_val(prec, 1e-4),
            h_min: super::pow2(prec, -(prec as i32) / 2),
            max_steps: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub s: Complex,
    pub h: Complex,
    pub state: Vec<Complex>,
    pub coeffs: Vec<Complex>,
    pub local_err: Float,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Halt {
    Pole { estimate: Complex, reached: Complex },
}

#[derive(Clone, Debug)]
pub struct SolutionGrid {
    pub order: usize,
    pub steps: Vec<Step>,
    pub end: Complex,
    pub end_state: Vec<Complex>,
    pub halt: Option<Halt>,
}

/// Values of y, y′, …, y^{(m−1)} at s0 + h from the coefficients about s0.
pub fn taylor_eval(coeffs: &[Complex], h: &Complex, m: usize) -> Vec<Complex> {
    let p = h.prec().0;
    let n = coeffs.len();
    (0..m)
        .map(|d| {
            let mut acc = Complex::new(p);
            for k in (d..n).rev() {
                acc *= h;
                let mut c = coeffs[k].clone();
                // k!/(k−d)!
                for j in 0..d {
                    c *= (k - j) as u32;
                }
                acc += c;
            }
            acc
        })
        .collect()
}

impl SolutionGrid {
    pub fn prec(&self) -> u32 {
        self.end.prec().0
    }

    /// Dense output: y and its derivatives (up to the ODE order) at s on the path.
    pub fn eval(&self, s: &Complex) -> Option<Vec<Complex>> {
        let p = self.prec();
        for st in self.steps.iter() {
            let off = Complex::with_val(p, s - &st.s);
            let frac = Complex::with_val(p, &off / &st.h);
            let re = frac.real().to_f64();
            if (-1e-12..=1.0 + 1e-12).contains(&re) && frac.imag().to_f64().abs() < 1e-9 {
                return Some(taylor_eval(&st.coeffs, &off, self.order + 1));
            }
        }
        None
    }

    pub fn into_complete(self) -> Result<Self> {
        match &self.halt {
            Some(Halt::Pole { estimate, reached }) => {
                Err(Error::PoleEncountered { location: estimate.clone(), reached: reached.clone() })
            }
            None => Ok(self),
        }
    }
}

/// Integrate from s0 to s1 along the straight segment. A pole estimated closer
/// than `pole_guard` ahead on the path halts the integration with `Halt::Pole`.
pub fn ode_solve<F: TaylorField>(field: &F, y0: &[Complex], s0: &Complex, s1: &Complex, spec: &OdeSpec) -> Result<SolutionGrid> {
    let prec = spec.prec;
    let d = field.order();
    if y0.len() != d {
        return Err(Error::Domain(format!("initial state must have {d} entries")));
    }
    if y0.iter().any(|v| !super::is_finite(v)) {
        return Err(Error::Domain("initial state not finite".into()));
    }
    let span = Complex::with_val(prec, s1 - s0);
    let length = abs(&span);
    let mut grid = SolutionGrid { order: d, steps: vec![], end: s0.clone(), end_state: y0.to_vec(), halt: None };
    if length.is_zero() {
        return Ok(grid);
    }
    let dir = Complex::with_val(prec, &span / &length);
    let mut s = s0.clone();
    let mut state: Vec<Complex> = y0.iter().map(|v| Complex::with_val(prec, v)).collect();
    let mut travelled = Float::with_val(prec, 0);
    let n = spec.terms;
    for _ in 0..spec.max_steps {
        let remaining = Float::with_val(prec, &length - &travelled);
        if remaining <= 0 {
            grid.end = s;
            grid.end_state = state;
            return Ok(grid);
        }
        let c = field.coefficients(&s, &state, n + 1)?;
        let scale = abs(&c[0]).max(&Float::with_val(prec, 1));
        let tol_abs = Float::with_val(prec, &spec.tol * &scale);
        let mut h: Option<Float> = None;
        for k in [n, n - 1] {
            let ck = abs(&c[k]);
            if !ck.is_zero() {
                let r = Float::with_val(prec, &tol_abs / &ck).pow(Float::with_val(prec, 1) / k as u32);
                h = Some(match h {
                    Some(x) if x < r => x,
                    _ => r,
                });
            }
        }
        if let Some(p) = pole_estimate(&c, n) {
            let rel = Complex::with_val(prec, &p / &dir);
            let dist = abs(&p);
            let ahead = rel.real().is_sign_positive() && Float::with_val(prec, rel.imag().abs_ref()) < Float::with_val(prec, &dist / 4u32);
            if ahead {
                if dist < spec.pole_guard {
                    grid.halt = Some(Halt::Pole { estimate: Complex::with_val(prec, &s + &p), reached: s.clone() });
                    grid.end = s;
                    grid.end_state = state;
                    return Ok(grid);
                }
                let cap = Float::with_val(prec, &dist / 2u32);
                h = Some(match h {
                    Some(x) if x < cap => x,
                    _ => cap,
                });
            }
        }
        let mut hh = match h {
            Some(x) if x < remaining => x,
            _ => remaining.clone(),
        };
        if hh < spec.h_min {
            if remaining < spec.h_min {
                hh = remaining.clone();
            } else {
                return Err(Error::StepUnderflow { at: s });
            }
        }
        let hc = Complex::with_val(prec, &dir * &hh);
        let mut err = Float::with_val(prec, 0);
        for k in [n, n - 1] {
            err += abs(&c[k]) * Float::with_val(prec, (&hh).pow(k as u32));
        }
        let next = taylor_eval(&c, &hc, d);
        if next.iter().any(|v| !super::is_finite(v)) {
            return Err(Error::StepUnderflow { at: s });
        }
        grid.steps.push(Step { s: s.clone(), h: hc.clone(), state: state.clone(), coeffs: c, local_err: err });
        s += &hc;
        state = next;
        travelled += &hh;
        if Float::with_val(prec, &length - &travelled) <= Float::with_val(prec, &length >> (prec as i32 - 8)) {
            grid.end = s1.clone();
            grid.end_state = state;
            return Ok(grid);
        }
    }
    Err(Error::StepUnderflow { at: s })
}

/// p − s0 = 1/(N r_N − (N−1) r_{N−1}), r_k = c_k/c_{k−1}; exact for a simple
/// or double pole. Two consecutive estimates must agree, otherwise the nearest
/// singularities are not a single pole (e.g. a conjugate pair) and None is returned.
fn pole_estimate(c: &[Complex], n: usize) -> Option<Complex> {
    let one = pole_estimate_at(c, n)?;
    let two = pole_estimate_at(c, n - 1)?;
    let p = c[n].prec().0;
    let d = abs(&Complex::with_val(p, &one - &two));
    if d > Float::with_val(p, abs(&one) / 10u32) {
        return None;
    }
    Some(one)
}

fn pole_estimate_at(c: &[Complex], n: usize) -> Option<Complex> {
    if n < 3 || c[n].is_zero() || c[n - 1].is_zero() || c[n - 2].is_zero() {
        return None;
    }
    let p = c[n].prec().0;
    let rn = Complex::with_val(p, &c[n] / &c[n - 1]);
    let rn1 = Complex::with_val(p, &c[n - 1] / &c[n - 2]);
    let den = rn * n as u32 - rn1 * (n - 1) as u32;
    if den.is_zero() {
        return None;
    }
    Some(Complex::with_val(p, 1) / den)
}

/// Cauchy-product helper: [a·b]_k.
pub fn cauchy(a: &[Complex], b: &[Complex], k: usize) -> Complex {
    let p = a[0].prec().0;
    let mut acc = Complex::new(p);
    for i in 0..=k {
        acc += Complex::with_val(p, &a[i] * &b[k - i]);
    }
    acc
}
