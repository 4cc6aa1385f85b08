//! Hankel determinants and three-term recurrence coefficients from a single
//! moment table, with orthogonality checked on the fly.

use hankel_painleve::numkernel::QuadratureSpec;
use hankel_painleve::orthopoly::{hankel_logdet, orthogonality_residual, recurrence_table, three_term_residual};
use hankel_painleve::weight::{moment_table, WeightParams};

fn main() -> hankel_painleve::Result<()> {
    let p = 384;
    let kmax = 6;
    let w = WeightParams::new(6, -0.04, 0.5, p);
    let tab = moment_table(&w, 0, 2 * kmax as i64 + 1, &QuadratureSpec::new(p))?;
    let rec = recurrence_table(kmax, &tab)?;
    println!("{:>2} {:>24} {:>24} {:>24}", "k", "log D_k", "alpha_k", "beta_k");
    for k in 1..kmax {
        let e = rec.entry(k)?;
        let ld = hankel_logdet(k, &tab)?.log_det;
        let beta = e.beta.as_ref().map(|b| b.real().to_f64()).unwrap_or(f64::NAN);
        println!("{k:>2} {:>24.16} {:>24.16} {:>24.16}", ld.real().to_f64(), e.alpha.real().to_f64(), beta);
        let o = orthogonality_residual(k, &rec, &tab)?;
        let r = three_term_residual(k, &rec)?;
        println!("   orthogonality {:.1e}, three-term {:.1e}", o.to_f64(), r.to_f64());
    }
    Ok(())
}
