//! Arbitrary-precision substrate: path quadrature, Taylor-series ODE stepping,
//! Newton iteration, finite differences and the precision-doubling certificate.
//!
//! Every routine takes its working precision explicitly; nothing reads a global
//! default.

pub mod certify;
pub mod diff;
pub mod linalg;
pub mod newton;
pub mod ode;
mod path;
pub mod quad;

pub use certify::{certify, Agree, Certificate};
pub use diff::{finite_diff, finite_diff_orders, DiffEstimate, StepPolicy};
pub use newton::{newton_solve, NewtonResult, NewtonSpec};
pub use ode::{ode_solve, Halt, OdeSpec, SolutionGrid, TaylorField};
pub use path::{PathSegment, SegmentKind};
pub use quad::{quad_segment, quad_segment_vec, EndpointHint, QuadratureSpec};

use rug::float::Constant;
use rug::{Complex, Float};

pub type BigReal = Float;
pub type BigComplex = Complex;

pub fn real(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

pub fn cplx(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

pub fn cplx_of(x: &Float) -> Complex {
    Complex::with_val(x.prec(), (x, 0))
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// 2πi at the given precision.
pub fn two_pi_i(prec: u32) -> Complex {
    let p = pi(prec) * 2u32;
    Complex::with_val(prec, (0, p))
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// z^k by repeated squaring; MPC's own integer power goes through exp/log.
pub fn powi(z: &Complex, k: u32) -> Complex {
    let p = z.prec().0;
    let mut acc = Complex::with_val(p, 1);
    let mut base = z.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc *= &base;
        }
        k >>= 1;
        if k > 0 {
            base.square_mut();
        }
    }
    acc
}

/// |Re| + |Im|, within a factor √2 of |z| and much cheaper.
pub fn abs_l1(z: &Complex) -> Float {
    let p = z.prec().0;
    Float::with_val(p, z.real().abs_ref()) + Float::with_val(p, z.imag().abs_ref())
}

pub fn abs_f64(z: &Complex) -> f64 {
    abs(z).to_f64()
}

/// 2^{-bits} as a Float.
pub fn pow2(prec: u32, bits: i32) -> Float {
    Float::with_val(prec, 1) << bits
}

/// Decimal digits of agreement between a and b, relative to max(|b|, floor).
pub fn agree_digits(a: &Complex, b: &Complex, floor: f64) -> f64 {
    let p = b.prec().0;
    let cap = f64::from(p) * std::f64::consts::LOG10_2;
    let d = abs(&Complex::with_val(p, a - b));
    if d.is_zero() {
        return cap;
    }
    let s = log10_float(&abs(b)).max(floor.log10());
    (s - log10_float(&d)).min(cap)
}

/// log10 of a positive Float without overflowing f64 for huge exponents.
pub fn log10_float(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log10() + f64::from(e) * std::f64::consts::LOG10_2
}

pub fn is_finite(z: &Complex) -> bool {
    z.real().is_finite() && z.imag().is_finite()
}

pub fn decimal(x: &Float, digits: usize) -> String {
    x.to_string_radix(10, Some(digits.max(2)))
}
