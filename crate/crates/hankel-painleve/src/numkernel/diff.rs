use super::{abs, pow2};
use crate::error::{Error, Result};
use rug::{Complex, Float};

#[derive(Clone, Debug)]
pub struct StepPolicy {
    pub h: Float,
    pub richardson: bool,
}

impl StepPolicy {
    /// h = 2^{-P/4}
    pub fn for_precision(prec: u32) -> Self {
        StepPolicy { h: pow2(prec, -(prec as i32) / 4), richardson: true }
    }

    pub fn with_step(h: Float) -> Self {
        StepPolicy { h, richardson: true }
    }
}

#[derive(Clone, Debug)]
pub struct DiffEstimate {
    pub value: Complex,
    pub err: Float,
}

struct Samples {
    center: Complex,
    h: [Complex; 2],
    h2: [Complex; 2],
}

fn sample<G>(g: &mut G, x: &Complex, policy: &StepPolicy, need_center: bool) -> Result<Samples>
where
    G: FnMut(&Complex) -> Result<Complex>,
{
    let p = x.prec().0;
    let h = Complex::with_val(p, &policy.h);
    let h2 = Complex::with_val(p, &h / 2u32);
    let center = if need_center { g(x)? } else { Complex::new(p) };
    let a = [g(&Complex::with_val(p, x + &h))?, g(&Complex::with_val(p, x - &h))?];
    let b = [g(&Complex::with_val(p, x + &h2))?, g(&Complex::with_val(p, x - &h2))?];
    Ok(Samples { center, h: a, h2: b })
}

fn combine(coarse: Complex, fine: Complex, richardson: bool) -> DiffEstimate {
    let p = fine.prec().0;
    if richardson {
        let r = (Complex::with_val(p, &fine * 4u32) - &coarse) / 3u32;
        let err = abs(&Complex::with_val(p, &r - &fine));
        DiffEstimate { value: r, err }
    } else {
        let err = abs(&Complex::with_val(p, &fine - &coarse));
        DiffEstimate { value: fine, err }
    }
}

fn first(s: &Samples, h: &Float) -> (Complex, Complex) {
    let p = s.center.prec().0;
    let d = Complex::with_val(p, &s.h[0] - &s.h[1]) / Float::with_val(p, h * 2u32);
    let d2 = Complex::with_val(p, &s.h2[0] - &s.h2[1]) / h.clone();
    (d, d2)
}

fn second(s: &Samples, h: &Float) -> (Complex, Complex) {
    let p = s.center.prec().0;
    let c2 = Complex::with_val(p, &s.center * 2u32);
    let hh = Float::with_val(p, h.square_ref());
    let d = (Complex::with_val(p, &s.h[0] + &s.h[1]) - &c2) / &hh;
    let d2 = (Complex::with_val(p, &s.h2[0] + &s.h2[1]) - &c2) / hh * 4u32;
    (d, d2)
}

/// Central-difference derivative of order 1 or 2 at steps h and h/2, combined
/// by one Richardson step; the error estimate is the change made by it.
pub fn finite_diff<G>(mut g: G, x: &Complex, order: u32, policy: &StepPolicy) -> Result<DiffEstimate>
where
    G: FnMut(&Complex) -> Result<Complex>,
{
    match order {
        1 => {
            let s = sample(&mut g, x, policy, false)?;
            let (a, b) = first(&s, &policy.h);
            Ok(combine(a, b, policy.richardson))
        }
        2 => {
            let s = sample(&mut g, x, policy, true)?;
            let (a, b) = second(&s, &policy.h);
            Ok(combine(a, b, policy.richardson))
        }
        _ => Err(Error::Domain(format!("finite_diff supports orders 1 and 2, got {order}"))),
    }
}

/// First and second derivatives from one shared set of five samples.
pub fn finite_diff_orders<G>(mut g: G, x: &Complex, policy: &StepPolicy) -> Result<(DiffEstimate, DiffEstimate)>
where
    G: FnMut(&Complex) -> Result<Complex>,
{
    let s = sample(&mut g, x, policy, true)?;
    let (a, b) = first(&s, &policy.h);
    let (c, d) = second(&s, &policy.h);
    Ok((combine(a, b, policy.richardson), combine(c, d, policy.richardson)))
}
