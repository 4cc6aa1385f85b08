//! Moments of z^n e^{-n(z + t/z)} on the contour, with the Bessel closed form
//! for t > 0 as a cross-check.

use hankel_painleve::numkernel::QuadratureSpec;
use hankel_painleve::weight::{moment_oracle, moment_table, WeightParams};

fn main() -> hankel_painleve::Result<()> {
    let p = 256;
    let spec = QuadratureSpec::new(p);
    for t in [0.5, -0.0507] {
        let w = WeightParams::new(4, t, 0.5, p);
        let tab = moment_table(&w, -1, 6, &spec)?;
        println!("n = 4, t = {t}");
        for e in tab.entries.iter() {
            let check = match moment_oracle(e.j, &w, p) {
                Ok(o) => format!("{:.1e}", (o - e.value.real()).abs().to_f64()),
                Err(_) => "-".into(),
            };
            println!(
                "  μ_{:<2} = {:+.15e} {:+.3e}i   err {:.1e}   |Δ oracle| {check}",
                e.j,
                e.value.real().to_f64(),
                e.value.imag().to_f64(),
                e.err.to_f64()
            );
        }
    }
    Ok(())
}
