//! Precision doubling: evaluate at P and 2P and accept when the requested
//! number of decimal digits agree.

use super::{agree_digits, cplx_of};
use crate::error::{Error, Result};
use rug::{Complex, Float};
use serde::Serialize;

pub trait Agree {
    /// Decimal digits to which `self` (higher precision) and `other` agree.
    fn agreement(&self, other: &Self) -> f64;
}

impl Agree for Complex {
    fn agreement(&self, other: &Self) -> f64 {
        agree_digits(other, self, 0.0)
    }
}

impl Agree for Float {
    fn agreement(&self, other: &Self) -> f64 {
        agree_digits(&cplx_of(other), &cplx_of(self), 0.0)
    }
}

impl<T: Agree> Agree for Vec<T> {
    fn agreement(&self, other: &Self) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| a.agreement(b)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Certificate {
    pub prec: u32,
    pub digits: f64,
}

/// Runs `f` at prec0, 2·prec0, … until two consecutive runs agree to `digits`.
/// Returns the higher-precision result.
pub fn certify<T, F>(mut f: F, digits: f64, prec0: u32, cap: u32) -> Result<(T, Certificate)>
where
    T: Agree,
    F: FnMut(u32) -> Result<T>,
{
    let mut p = prec0;
    let mut lo = f(p)?;
    let mut best = 0.0;
    loop {
        if 2 * p > cap {
            return Err(Error::PrecisionCap { cap, digits: best });
        }
        let hi = f(2 * p)?;
        let d = hi.agreement(&lo);
        if d >= digits {
            return Ok((hi, Certificate { prec: 2 * p, digits: d }));
        }
        best = d;
        p *= 2;
        lo = hi;
    }
}
