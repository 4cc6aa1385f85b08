//! Sign map of Re φ_t near the critical time, written as CSV, with q(a_cr)
//! and the θ relation at a few points near a_cr.
//!
//! cargo run --release --example phi_regions > regions.csv

use hankel_painleve::equilibrium::{critical_constants, phi_maps, sign_region_check, theta_relation_residual, GridSpec};
use hankel_painleve::numkernel::QuadratureSpec;
use rug::{Complex, Float};

fn main() -> hankel_painleve::Result<()> {
    let p = 128;
    let cc = critical_constants(p);
    let t = Float::with_val(p, &cc.t_cr + 0.002f64);
    let maps = phi_maps(&t, &QuadratureSpec::new(p))?;
    let grid = GridSpec { nx: 15, ny: 9, log_decades: 2, ..GridSpec::default() };
    let map = sign_region_check(&maps, &grid)?;
    for (what, ok) in map.checks.iter() {
        eprintln!("{what}: {ok}");
    }
    let q = maps.q_at_acr()?;
    eprintln!("q(a_cr) = {:.10} (first order {:.10})", q.real().to_f64(), maps.q_at_acr_closed().to_f64());
    for dy in [0.002, 0.01] {
        let z = Complex::with_val(p, (cc.a_cr.to_f64(), dy));
        eprintln!("θ relation at a_cr + {dy}i: {:.1e}", theta_relation_residual(&maps, 32, &z)?.to_f64());
    }
    map.write_csv(std::io::stdout())
}
