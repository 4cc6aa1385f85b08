//! a_{k,n}(t) from Hankel data against the Painlevé III trajectory launched
//! from a fitted series near t = 0, plus the u-transform and first integral.

use hankel_painleve::numkernel::{QuadratureSpec, StepPolicy};
use hankel_painleve::painleve3::{first_integral_check, p3_solve_from_hankel, p3_verify, u_transform_check};
use hankel_painleve::weight::WeightParams;
use rug::Float;

fn main() -> hankel_painleve::Result<()> {
    let p = 256;
    let (k, n) = (1, 2);
    let spec = QuadratureSpec::new(p);
    let w = WeightParams::new(n, 0.1, 0.5, p);
    let traj = p3_solve_from_hankel(k, &w, &Float::with_val(p, 0.0125), &Float::with_val(p, 0.5), &spec, 1e-20)?;
    println!("launch constant B = {:.12}", traj.series.b_const.real().to_f64());
    let grid: Vec<Float> = (0..6).map(|i| Float::with_val(p, 0.05 + 0.09 * i as f64)).collect();
    for pt in p3_verify(k, &w, &traj, &grid, &spec)? {
        println!("t = {:.3}  a = {:+.15}  |Hankel − ODE| {:.1e}", pt.t.to_f64(), pt.a_hankel.real().to_f64(), pt.deviation.to_f64());
    }
    let u = u_transform_check(k, &w, &grid[..2], &spec, &StepPolicy::for_precision(p))?;
    println!("u-transform residuals {:.1e} {:.1e}", u[0].residual.to_f64(), u[1].residual.to_f64());
    let fi = first_integral_check(k, &w, &spec, &StepPolicy::for_precision(p))?;
    println!("first integral at t = 0.1: {:.1e}", fi.residual.to_f64());
    Ok(())
}
