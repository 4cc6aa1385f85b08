//! The real tronquée Painlevé I solution: asymptotic series on the far left,
//! Taylor integration to the right until the first pole.

use hankel_painleve::painleve1::{p1_solve, tritronquee_series, P1Spec};

fn main() -> hankel_painleve::Result<()> {
    let series = tritronquee_series(60, 256)?;
    for (i, c) in series.coeffs.iter().take(5).enumerate() {
        println!("a_{i} = {:+.12e}", c.to_f64());
    }
    let sol = p1_solve(-30.0, 5.0, &P1Spec::new(512))?;
    println!("launched at s = {} with {} series terms", sol.s_start.to_f64(), sol.initial.used);
    for pt in sol.points.iter().filter(|q| q.s.to_f64().fract() == 0.0 && q.s.to_f64() > -8.5) {
        println!("s = {:+5.1}  y = {:+.10}  H = {:+.10}", pt.s.to_f64(), pt.y.real().to_f64(), pt.h.real().to_f64());
    }
    println!("max |H′ + y| = {:.1e}", sol.max_h_residual().to_f64());
    if let Some(pole) = &sol.pole {
        println!("pole near s = {:.4}", pole.estimate.real().to_f64());
    }
    Ok(())
}
