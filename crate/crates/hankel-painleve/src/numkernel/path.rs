use super::abs;
use crate::error::{Error, Result};
use rug::{Complex, Float};

#[derive(Clone, Debug, PartialEq)]
pub enum SegmentKind {
    Line { from: Complex, to: Complex },
    /// center + radius·e^{iθ}, θ from theta0 to theta1 (either direction).
    Arc { center: Complex, radius: Float, theta0: Float, theta1: Float },
}

/// A line or circular arc together with an orientation flag. Quadrature always
/// runs over the canonical parametrisation; `reversed` only flips the sign.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub reversed: bool,
}

impl PathSegment {
    pub fn line(from: Complex, to: Complex) -> Result<Self> {
        if from == to {
            return Err(Error::Domain("line segment with coincident endpoints".into()));
        }
        Ok(PathSegment { kind: SegmentKind::Line { from, to }, reversed: false })
    }

    pub fn arc(center: Complex, radius: Float, theta0: Float, theta1: Float) -> Result<Self> {
        if !(radius > 0) {
            return Err(Error::Domain("arc radius must be positive".into()));
        }
        if theta0 == theta1 {
            return Err(Error::Domain("arc with empty angular range".into()));
        }
        Ok(PathSegment { kind: SegmentKind::Arc { center, radius, theta0, theta1 }, reversed: false })
    }

    pub fn reverse(&self) -> Self {
        PathSegment { kind: self.kind.clone(), reversed: !self.reversed }
    }

    pub fn prec(&self) -> u32 {
        match &self.kind {
            SegmentKind::Line { from, .. } => from.prec().0,
            SegmentKind::Arc { center, .. } => center.prec().0,
        }
    }

    fn canonical_ends(&self) -> (Complex, Complex) {
        match &self.kind {
            SegmentKind::Line { from, to } => (from.clone(), to.clone()),
            SegmentKind::Arc { center, radius, theta0, theta1 } => {
                let p = center.prec().0;
                let z0 = Complex::with_val(p, (0, theta0)).exp() * radius + center;
                let z1 = Complex::with_val(p, (0, theta1)).exp() * radius + center;
                (z0, z1)
            }
        }
    }

    pub fn start(&self) -> Complex {
        let (a, b) = self.canonical_ends();
        if self.reversed { b } else { a }
    }

    pub fn end(&self) -> Complex {
        let (a, b) = self.canonical_ends();
        if self.reversed { a } else { b }
    }

    pub fn length(&self) -> Float {
        match &self.kind {
            SegmentKind::Line { from, to } => abs(&Complex::with_val(from.prec().0, to - from)),
            SegmentKind::Arc { radius, theta0, theta1, .. } => {
                Float::with_val(radius.prec(), theta1 - theta0).abs() * radius
            }
        }
    }

    /// Canonical point and derivative dz/du for u in [-1, 1]. `near` carries
    /// the offset 1∓u when it is known more accurately than u itself, so that
    /// points next to an endpoint keep their distance to it.
    pub(crate) fn point(&self, u: &Float, comp: Option<(&Float, bool)>) -> (Complex, Complex) {
        let p = u.prec();
        match &self.kind {
            SegmentKind::Line { from, to } => {
                let half = Complex::with_val(p, to - from) / 2u32;
                let z = match comp {
                    // u close to +1: z = to − half·(1−u)
                    Some((c, true)) => Complex::with_val(p, to - Complex::with_val(p, &half * c)),
                    // u close to −1: z = from + half·(1+u)
                    Some((c, false)) => Complex::with_val(p, from + Complex::with_val(p, &half * c)),
                    None => {
                        let mid = Complex::with_val(p, from + to) / 2u32;
                        mid + Complex::with_val(p, &half * u)
                    }
                };
                (z, half)
            }
            SegmentKind::Arc { center, radius, theta0, theta1 } => {
                let half = Float::with_val(p, theta1 - theta0) / 2u32;
                let th = match comp {
                    Some((c, true)) => Float::with_val(p, theta1 - &half * c),
                    Some((c, false)) => Float::with_val(p, theta0 + &half * c),
                    None => Float::with_val(p, theta0 + theta1) / 2u32 + &half * u,
                };
                let e = Complex::with_val(p, (0, &th)).exp();
                let z = Complex::with_val(p, &e * radius) + center;
                let dz = e * Complex::with_val(p, (0, Float::with_val(p, &half * radius)));
                (z, dz)
            }
        }
    }
}

