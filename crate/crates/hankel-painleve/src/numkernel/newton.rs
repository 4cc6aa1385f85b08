use super::linalg::solve_real;
use super::pow2;
use crate::error::{Error, Result};
use rug::Float;

#[derive(Clone, Debug)]
pub struct NewtonSpec {
    pub tol: Float,
    pub max_iter: usize,
}

impl NewtonSpec {
    pub fn new(prec: u32) -> Self {
        NewtonSpec { tol: pow2(prec, -(prec as i32) + 16), max_iter: 60 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub root: Vec<Float>,
    pub residual: Float,
    pub iterations: usize,
}

pub type Jacobian<'a> = &'a dyn Fn(&[Float]) -> Result<Vec<Vec<Float>>>;

fn norm_inf(v: &[Float]) -> Float {
    let mut m = Float::with_val(v[0].prec(), 0);
    for x in v {
        let a = x.clone().abs();
        if a > m {
            m = a;
        }
    }
    m
}

/// Damped Newton iteration. The Jacobian is taken from `jac` when supplied,
/// otherwise by forward differences with step 2^{-P/2}·max(1,|x|).
pub fn newton_solve<F>(f: F, jac: Option<Jacobian>, x0: Vec<Float>, spec: &NewtonSpec) -> Result<NewtonResult>
where
    F: Fn(&[Float]) -> Result<Vec<Float>>,
{
    let prec = x0[0].prec();
    let m = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut r = norm_inf(&fx);
    for it in 0..spec.max_iter {
        if r <= spec.tol {
            return Ok(NewtonResult { root: x, residual: r, iterations: it });
        }
        let j = match jac {
            Some(j) => j(&x)?,
            None => {
                let mut cols: Vec<Vec<Float>> = vec![vec![Float::new(prec); m]; m];
                for c in 0..m {
                    let scale = x[c].clone().abs().max(&Float::with_val(prec, 1));
                    let h = scale * pow2(prec, -(prec as i32) / 2);
                    let mut xp = x.clone();
                    xp[c] += &h;
                    let fp = f(&xp)?;
                    for r_ in 0..m {
                        cols[r_][c] = Float::with_val(prec, &fp[r_] - &fx[r_]) / &h;
                    }
                }
                cols
            }
        };
        let rhs: Vec<Float> = fx.iter().map(|v| Float::with_val(prec, -v)).collect();
        let dx = solve_real(j, rhs)?;
        let mut lambda = Float::with_val(prec, 1);
        let mut accepted = false;
        for _ in 0..40 {
            let xn: Vec<Float> = x.iter().zip(dx.iter()).map(|(a, d)| Float::with_val(prec, a + &lambda * d)).collect();
            if let Ok(fn_) = f(&xn) {
                let rn = norm_inf(&fn_);
                if rn < r || rn <= spec.tol {
                    x = xn;
                    fx = fn_;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            lambda /= 2u32;
        }
        if !accepted {
            // no decrease possible: either converged to rounding or stuck
            if r <= spec.tol {
                break;
            }
            return Err(Error::Diverged { iterations: it + 1, residual: r.to_f64() });
        }
    }
    if r <= spec.tol {
        let it = spec.max_iter;
        return Ok(NewtonResult { root: x, residual: r, iterations: it });
    }
    Err(Error::Diverged { iterations: spec.max_iter, residual: r.to_f64() })
}
