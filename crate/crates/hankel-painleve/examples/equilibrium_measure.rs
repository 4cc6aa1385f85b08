//! Densities on either side of t_cr, their mass, the Lagrange multiplier and
//! the variational inequality to the right of the support.

use hankel_painleve::equilibrium::{critical_constants, g_and_l, solve_signed, variational_gap, DensityMode, DensityModel};
use hankel_painleve::numkernel::QuadratureSpec;
use rug::Float;

fn main() -> hankel_painleve::Result<()> {
    let p = 256;
    let spec = QuadratureSpec::new(p);
    let cc = critical_constants(p);
    for (t, mode) in [
        (Float::with_val(p, 0), DensityMode::Regular),
        (cc.t_cr.clone(), DensityMode::Critical),
        (Float::with_val(p, &cc.t_cr - 0.01f64), DensityMode::Signed),
    ] {
        let m = DensityModel::build(&t, mode)?;
        let (lo, hi) = m.support();
        let mass = m.mass(&spec)?;
        let mid = Float::with_val(p, &lo + &hi) / 2u32;
        println!(
            "{mode:?} t={:+.5}: support [{:.6}, {:.6}], mass − 1 = {:.1e}, density at midpoint {:.6}",
            t.to_f64(),
            lo.to_f64(),
            hi.to_f64(),
            (mass - 1u32).to_f64(),
            m.eval(&mid)?.to_f64()
        );
    }
    let s = solve_signed(&Float::with_val(p, &cc.t_cr - 0.01f64))?;
    let (model, lag) = g_and_l(&s, &spec)?;
    println!("l = {:.12}, Euler–Lagrange spread {:.1e}", lag.l.to_f64(), lag.spread.to_f64());
    for dx in [0.5, 1.0, 3.0] {
        let x = Float::with_val(p, &s.b + dx);
        println!("  2g − V − l at b + {dx}: {:.6}", variational_gap(&model, &x, &s.t, &lag.l, &spec)?.to_f64());
    }
    Ok(())
}
