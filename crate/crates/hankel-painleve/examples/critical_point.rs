//! Critical constants and the endpoints of the equilibrium measure as t
//! moves toward the fold.

use hankel_painleve::equilibrium::{critical_constants, solve_endpoints, solve_signed};
use rug::Float;

fn main() -> hankel_painleve::Result<()> {
    let p = 256;
    let cc = critical_constants(p);
    println!("t_cr = {}", cc.t_cr.to_string_radix(10, Some(30)));
    println!("a_cr = {}", cc.a_cr.to_string_radix(10, Some(30)));
    println!("b_cr = {}", cc.b_cr.to_string_radix(10, Some(30)));
    println!("s* scaling constant K = {:.6}", cc.scaling_constant().to_f64());

    println!("\n{:>9} {:>12} {:>12} {:>10}", "t", "a", "b", "a+c");
    for t in [0.2, 0.1, 0.0, -0.02, -0.04, -0.05] {
        let e = solve_endpoints(&Float::with_val(p, t))?;
        let ac = Float::with_val(p, &e.a + &e.c);
        println!("{t:>9.4} {:>12.8} {:>12.8} {:>10.2e}", e.a.to_f64(), e.b.to_f64(), ac.to_f64());
    }
    // below t_cr only the signed measure exists
    let t = Float::with_val(p, -0.06);
    assert!(solve_endpoints(&t).is_err());
    let s = solve_signed(&t)?;
    println!("\nt = -0.06 (signed): b = {:.8}, d0 = {:.8}, d1 = {:.8}", s.b.to_f64(), s.d0.to_f64(), s.d1.to_f64());
    Ok(())
}
