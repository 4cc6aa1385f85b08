//! Dense LU with partial pivoting over BigComplex / BigReal.

use super::abs;
use crate::error::{Error, Result};
use rug::{Complex, Float};

pub struct ComplexLu {
    pub lu: Vec<Vec<Complex>>,
    pub perm: Vec<usize>,
    pub swaps: usize,
}

pub fn lu_complex(mut a: Vec<Vec<Complex>>) -> Result<ComplexLu> {
    let n = a.len();
    let prec = if n > 0 { a[0][0].prec().0 } else { 64 };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut swaps = 0;
    for k in 0..n {
        let mut piv = k;
        let mut best = abs(&a[k][k]);
        for i in (k + 1)..n {
            let m = abs(&a[i][k]);
            if m > best {
                best = m;
                piv = i;
            }
        }
        if best.is_zero() {
            return Err(Error::Singular { k: k + 1, digits: 0.0 });
        }
        if piv != k {
            a.swap(piv, k);
            perm.swap(piv, k);
            swaps += 1;
        }
        let (top, rest) = a.split_at_mut(k + 1);
        let prow = &top[k];
        let inv = Complex::with_val(prec, 1) / &prow[k];
        for row in rest.iter_mut() {
            let factor = Complex::with_val(prec, &row[k] * &inv);
            for j in (k + 1)..n {
                let t = Complex::with_val(prec, &factor * &prow[j]);
                row[j] -= t;
            }
            row[k] = factor;
        }
    }
    Ok(ComplexLu { lu: a, perm, swaps })
}

impl ComplexLu {
    /// Sum of principal logs of the pivots plus iπ per row swap; the caller
    /// chooses the branch it needs.
    pub fn log_det_raw(&self) -> Complex {
        let n = self.lu.len();
        let prec = if n > 0 { self.lu[0][0].prec().0 } else { 64 };
        let mut s = Complex::new(prec);
        for k in 0..n {
            s += Complex::with_val(prec, self.lu[k][k].ln_ref());
        }
        if self.swaps % 2 == 1 {
            s += Complex::with_val(prec, (0, super::pi(prec)));
        }
        s
    }

    pub fn pivots(&self) -> Vec<Complex> {
        (0..self.lu.len()).map(|k| self.lu[k][k].clone()).collect()
    }

    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        let n = self.lu.len();
        let prec = b[0].prec().0;
        let mut y: Vec<Complex> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = Complex::with_val(prec, &self.lu[i][j] * &y[j]);
                y[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let t = Complex::with_val(prec, &self.lu[i][j] * &y[j]);
                y[i] -= t;
            }
            y[i] /= &self.lu[i][i];
        }
        y
    }
}

/// Solve a real linear system by partial pivoting; SINGULAR_JACOBIAN on a zero pivot.
pub fn solve_real(mut a: Vec<Vec<Float>>, mut b: Vec<Float>) -> Result<Vec<Float>> {
    let n = a.len();
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if a[i][k].clone().abs() > a[piv][k].clone().abs() {
                piv = i;
            }
        }
        if a[piv][k].is_zero() {
            return Err(Error::SingularJacobian);
        }
        a.swap(piv, k);
        b.swap(piv, k);
        for i in (k + 1)..n {
            let f = Float::with_val(a[i][k].prec(), &a[i][k] / &a[k][k]);
            for j in k..n {
                let t = Float::with_val(f.prec(), &f * &a[k][j]);
                a[i][j] -= t;
            }
            let t = Float::with_val(f.prec(), &f * &b[k]);
            b[i] -= t;
        }
    }
    let mut x = b;
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let t = Float::with_val(x[i].prec(), &a[i][j] * &x[j]);
            x[i] -= t;
        }
        x[i] /= &a[i][i];
    }
    Ok(x)
}
