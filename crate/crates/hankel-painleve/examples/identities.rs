//! The differential identities tying a_k, H_k = d/dt log D_k, β_k and the
//! boundary values of Y together.

use hankel_painleve::numkernel::{QuadratureSpec, StepPolicy};
use hankel_painleve::orthopoly::identity_suite;
use hankel_painleve::weight::WeightParams;

fn main() -> hankel_painleve::Result<()> {
    let p = 512;
    for (k, n, t) in [(1, 2, 0.1), (2, 3, -0.04), (3, 4, 0.1)] {
        let w = WeightParams::new(n, t, 0.5, p);
        let r = identity_suite(k, &w, &QuadratureSpec::new(p), &StepPolicy::for_precision(p))?;
        println!(
            "k={k} n={n} t={t:+}: H = {:.12}  a–Y {:.1e}  dH–Y {:.1e}  β–H {:.1e}  H–Σa {:.1e}",
            r.derivatives.h.value.real().to_f64(),
            r.a_y.to_f64(),
            r.dh_y.to_f64(),
            r.beta_h.to_f64(),
            r.h_sum_a.to_f64()
        );
    }
    Ok(())
}
