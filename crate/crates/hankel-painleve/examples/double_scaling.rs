//! Painlevé I data read off finite-n recurrence coefficients near t_cr, from
//! three independent sources, and their PI residual on a short s* grid.
//!
//! cargo run --release --example double_scaling -- 16

use hankel_painleve::painleve1::{ds_precision, extract_at, pi_consistency_check};

fn main() -> hankel_painleve::Result<()> {
    let n: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut recs = vec![];
    for s in grid {
        let r = extract_at(n, s, 0.5, ds_precision(n))?;
        let y = |v: &Option<rug::Complex>| v.as_ref().map_or(f64::NAN, |z| z.real().to_f64());
        println!("n={n} s*={s:+.1}: y_β {:.5}  y_a {:.5}  y_dH {:.5}  H {:.5}", y(&r.y_beta), y(&r.y_a), y(&r.y_dh), y(&r.h_gamma));
        recs.push(r);
    }
    let rep = pi_consistency_check(&[recs], 10.0)?;
    for q in rep.per_n[0].points.iter() {
        if let Some(r) = &q.pi_residual {
            println!("s*={:+.1}: |y″ − 6y² − s*| = {:.3}", q.s_star.to_f64(), r.to_f64());
        }
    }
    Ok(())
}
