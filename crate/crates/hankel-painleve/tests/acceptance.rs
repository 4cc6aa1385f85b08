//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `HP_ACCEPTANCE_ONLY=1,2,7` restricts the run; `HP_ACCEPTANCE_STRICT=1`
//! turns any FAIL into a non-zero exit.

use hankel_painleve::equilibrium::*;
use hankel_painleve::numkernel::{abs, powi, QuadratureSpec, StepPolicy};
use hankel_painleve::orthopoly::identity_suite;
use hankel_painleve::painleve1::*;
use hankel_painleve::painleve3::*;
use hankel_painleve::weight::{moment_table, WeightParams};
use hankel_painleve::Result;
use rug::ops::Pow;
use rug::{Complex, Float};
use std::time::Instant;

struct Verdict {
    pass: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, lines: vec![] }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, what: String) {
        self.lines.push(format!("     {what}"));
    }
}

fn fdiff(a: &Float, b: &Float) -> f64 {
    Float::with_val(a.prec().max(b.prec()), a - b).abs().to_f64()
}

fn cdiff(a: &Complex, b: &Complex) -> f64 {
    abs(&Complex::with_val(a.prec().0, a - b)).to_f64()
}

// ---------------------------------------------------------------- 1, 2

fn closed_forms(p: u32) -> (Float, Float, Float) {
    let c = Float::with_val(p, 2).cbrt();
    let c2 = Float::with_val(p, c.square_ref());
    let t = -Float::with_val(p, &c - 1u32).square() * 3u32 / 4u32;
    let a = (Float::with_val(p, 3) - &c - &c2) / 2u32;
    let b = (Float::with_val(p, 1) + &c + &c2) * 3u32 / 2u32;
    (t, a, b)
}

fn criterion_1(v: &mut Verdict) -> Result<()> {
    let p = 256;
    let start = Instant::now();
    let cc = critical_constants(p);
    let elapsed = start.elapsed().as_secs_f64();
    let (t, a, b) = closed_forms(p);
    for (name, got, want) in [("t_cr", &cc.t_cr, &t), ("a_cr", &cc.a_cr, &a), ("b_cr", &cc.b_cr, &b)] {
        let rel = fdiff(got, want) / want.to_f64().abs();
        v.check(rel < 1e-50, format!("{name} = {} (rel {rel:.1e})", got.to_string_radix(10, Some(52))));
    }
    let printed = [(cc.t_cr.to_f64(), -0.051), (cc.a_cr.to_f64(), 0.076), (cc.b_cr.to_f64(), 5.771)];
    let shown: Vec<String> = printed.iter().map(|(x, _)| format!("{x:.3}")).collect();
    let ok = printed.iter().all(|(x, want)| format!("{x:.3}") == format!("{want:.3}"));
    v.check(ok, format!("three-digit values {}", shown.join(", ")));
    v.check(elapsed < 1.0, format!("runtime {elapsed:.3}s < 1s"));
    Ok(())
}

fn criterion_2(v: &mut Verdict) -> Result<()> {
    let p = 256;
    let start = Instant::now();
    let e = solve_endpoints(&Float::with_val(p, 0))?;
    let r8 = Float::with_val(p, 8).sqrt();
    let (a, b) = (Float::with_val(p, 3) - &r8, Float::with_val(p, 3) + &r8);
    v.check(fdiff(&e.a, &a) < 1e-70 && fdiff(&e.b, &b) < 1e-70, format!("(a, b) = (3−2√2, 3+2√2) to {:.1e}", fdiff(&e.a, &a).max(fdiff(&e.b, &b))));
    v.check(e.residual.to_f64() < 1e-30, format!("residual {:.1e} < 1e-30", e.residual.to_f64()));
    let el = start.elapsed().as_secs_f64();
    v.check(el < 1.0, format!("runtime {el:.3}s < 1s"));
    Ok(())
}

// ---------------------------------------------------------------- 3

/// K_ν(x) = ∫_0^∞ e^{−x cosh u} cosh(νu) du by the trapezoid rule, which
/// converges geometrically in the step for this entire integrand.
fn bessel_k_trapezoid(nu: u32, x: &Float) -> Float {
    let p = x.prec();
    let h = Float::with_val(p, 1) / 64u32;
    let mut sum = Float::with_val(p, 0);
    let mut k = 0u32;
    loop {
        let u = Float::with_val(p, &h * k);
        let cosh_u = Float::with_val(p, u.cosh_ref());
        let expo = Float::with_val(p, -(Float::with_val(p, x * &cosh_u)) + Float::with_val(p, &u * nu));
        if k > 0 && expo < -(f64::from(p) * 0.75) {
            break;
        }
        let term = Float::with_val(p, -(x * cosh_u)).exp() * Float::with_val(p, &u * nu).cosh();
        if k == 0 {
            sum += term / 2u32;
        } else {
            sum += term;
        }
        k += 1;
    }
    sum * h
}

fn criterion_3(v: &mut Verdict) -> Result<()> {
    let p = 512;
    let spec = QuadratureSpec::new(p);
    let mut worst = 0f64;
    for n in [1u32, 2, 4] {
        for t in [0.5, 1.0] {
            let w = WeightParams::new(n, t, 0.5, p);
            let tab = moment_table(&w, 0, 8, &spec)?;
            let tf = Float::with_val(p, t);
            let x = Float::with_val(p, tf.sqrt_ref()) * (2 * n);
            for j in 0..=8u32 {
                // ∫_0^∞ x^{ν−1} e^{−n(x + t/x)} dx = 2 t^{ν/2} K_ν(2n√t), ν = n + j + 1
                let nu = n + j + 1;
                let oracle = Float::with_val(p, tf.sqrt_ref()).pow(nu) * bessel_k_trapezoid(nu, &x) * 2u32;
                let rel = cdiff(tab.get(j as i64), &Complex::with_val(p, &oracle)) / oracle.to_f64().abs();
                worst = worst.max(rel);
            }
        }
    }
    v.check(worst < 1e-25, format!("contour vs Bessel oracle, worst relative {worst:.1e} < 1e-25 (n∈{{1,2,4}}, t∈{{0.5,1}}, j≤8)"));
    let mut ok = true;
    let mut ratio = 0f64;
    for (n, t) in [(4u32, 0.5), (2, -0.0507), (4, -0.0507)] {
        let w1 = WeightParams::new(n, t, 0.5, p).with_delta(0.03);
        let w2 = WeightParams::new(n, t, 0.5, p).with_delta(0.0381);
        let t1 = moment_table(&w1, 0, 8, &spec)?;
        let t2 = moment_table(&w2, 0, 8, &spec)?;
        for j in 0..=8 {
            let d = cdiff(t1.get(j), t2.get(j));
            let allowed = (Float::with_val(p, t1.err(j) + t2.err(j))).to_f64() + abs(t1.get(j)).to_f64() * 2f64.powi(-(p as i32) + 8);
            ok &= d <= allowed;
            ratio = ratio.max(d / allowed);
        }
    }
    v.check(ok, format!("δ ∈ {{0.03, 0.0381}} agree within combined error (worst |Δ|/bound {ratio:.2})"));
    Ok(())
}

// ---------------------------------------------------------------- 4, 6

const IDENTITY_SET: [(u32, u32); 3] = [(1, 2), (2, 3), (3, 4)];

fn criterion_4(v: &mut Verdict) -> Result<()> {
    let p = 512;
    let spec = QuadratureSpec::new(p);
    let policy = StepPolicy::for_precision(p);
    for (k, n) in IDENTITY_SET {
        for t in [0.1, -0.04] {
            let w = WeightParams::new(n, t, 0.5, p);
            let r = identity_suite(k as usize, &w, &spec, &policy)?;
            let four = [&r.a_y, &r.dh_y, &r.beta_h, &r.h_sum_a].map(|x| x.to_f64());
            let worst = four.iter().cloned().fold(0f64, f64::max);
            v.check(
                worst < 1e-8,
                format!("(k,n)=({k},{n}) t={t}: a–Y {:.1e}, dH–Y {:.1e}, β–H {:.1e}, H–Σa {:.1e}", four[0], four[1], four[2], four[3]),
            );
        }
    }
    Ok(())
}

fn criterion_6(v: &mut Verdict) -> Result<()> {
    let p = 512;
    let spec = QuadratureSpec::new(p);
    let policy = StepPolicy::for_precision(p);
    for (k, n) in IDENTITY_SET {
        for t in [0.1, -0.04] {
            let w = WeightParams::new(n, t, 0.5, p);
            let fi = first_integral_check(k, &w, &spec, &policy)?;
            let r = fi.residual.to_f64();
            v.check(r < 1e-8, format!("(k,n)=({k},{n}) t={t}: first integral {r:.1e}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 5

fn criterion_5(v: &mut Verdict) -> Result<()> {
    let p = 256;
    let spec = QuadratureSpec::new(p);
    let grid: Vec<Float> = (0..11).map(|i| Float::with_val(p, 0.05 + 0.045 * i as f64)).collect();
    for (k, n) in [(1u32, 2u32), (2, 3)] {
        let w = WeightParams::new(n, 0.1, 0.5, p);
        let traj = p3_solve_from_hankel(k, &w, &Float::with_val(p, 0.0125), &Float::with_val(p, 0.5), &spec, 1e-20)?;
        let pts = p3_verify(k, &w, &traj, &grid, &spec)?;
        let worst = pts.iter().map(|q| q.deviation.to_f64()).fold(0f64, f64::max);
        let worst_res = pts.iter().map(|q| q.hankel_residual.to_f64()).fold(0f64, f64::max);
        v.check(worst < 1e-8, format!("(k,n)=({k},{n}): max |a_Hankel − a_ODE| on 11 points in [0.05,0.5] = {worst:.1e}"));
        v.note(format!("Hankel values in the ODE: max normalised residual {worst_res:.1e}"));
        let u = u_transform_check(k, &w, &grid, &spec, &StepPolicy::for_precision(p))?;
        let uw = u.iter().map(|q| q.residual.to_f64()).fold(0f64, f64::max);
        v.check(uw < 1e-6, format!("(k,n)=({k},{n}): u-transform residual {uw:.1e} < 1e-6"));
    }
    Ok(())
}

// ---------------------------------------------------------------- 7

fn criterion_7(v: &mut Verdict) -> Result<()> {
    let p = 256;
    let spec = QuadratureSpec::new(p);
    let cc = critical_constants(p);
    let shift = |d: f64| Float::with_val(p, &cc.t_cr + d);
    let cases = [
        (Float::with_val(p, 0.2), DensityMode::Regular),
        (Float::with_val(p, 0), DensityMode::Regular),
        (Float::with_val(p, -0.03), DensityMode::Regular),
        (shift(-0.02), DensityMode::Signed),
        (shift(0.02), DensityMode::Signed),
        (cc.t_cr.clone(), DensityMode::Critical),
    ];
    for (t, mode) in cases {
        let m = DensityModel::build(&t, mode)?.mass(&spec)?;
        let e = Float::with_val(p, &m - 1u32).abs().to_f64();
        v.check(e < 1e-20, format!("{mode:?} t={:.4}: |mass − 1| = {e:.1e}", t.to_f64()));
    }
    for d in [-0.01, 0.01] {
        let s = solve_signed(&shift(d))?;
        let (model, lag) = g_and_l(&s, &spec)?;
        v.check(lag.spread.to_f64() < 1e-15, format!("t_cr{d:+}: Euler–Lagrange spread over 5 points {:.1e}", lag.spread.to_f64()));
        let x = Float::with_val(p, &s.b + 1u32);
        let gap = variational_gap(&model, &x, &s.t, &lag.l, &spec)?;
        v.check(gap < 0, format!("t_cr{d:+}: 2g − V − l at b+1 = {:.4} < 0", gap.to_f64()));
    }
    let s = solve_signed(&cc.t_cr)?;
    let a2 = Float::with_val(p, cc.a_cr.square_ref());
    let m2a = Float::with_val(p, &cc.a_cr * -2i32);
    let worst = fdiff(&s.b, &cc.b_cr).max(fdiff(&s.d0, &a2)).max(fdiff(&s.d1, &m2a));
    v.check(worst < 1e-20, format!("signed solver at t_cr gives (b_cr, a_cr², −2a_cr) to {worst:.1e}"));

    // φ_cr(z) ≈ i(z − a)^{5/2}√(b − a)/(5a²), arg(z − a) ∈ (0, 2π)
    let maps = phi_maps(&shift(0.005), &spec)?;
    let a = &cc.a_cr;
    let lead = Float::with_val(p, &cc.b_cr - a).sqrt() / (Float::with_val(p, a.square_ref()) * 5u32);
    let mut worst = 0f64;
    for ang in [2.0f64, std::f64::consts::PI, 2.0 * std::f64::consts::PI - 2.0] {
        let r = 1e-4;
        let z = Complex::with_val(p, (r * ang.cos(), r * ang.sin())) + a;
        let root = Complex::with_val(p, (0, ang / 2.0)).exp() * r.sqrt();
        let model = Complex::with_val(p, (0, 1)) * powi(&root, 5) * &lead;
        let ratio = maps.phi_cr(&z, None)? / model;
        worst = worst.max(abs(&(ratio - 1u32)).to_f64());
    }
    v.check(worst < 1e-3, format!("φ_cr local-law ratio at |z − a_cr| = 1e-4: max |ratio − 1| = {worst:.2e} (< 1e-3)"));
    let mut worst = 0f64;
    for d in [-0.005, 0.005] {
        let maps = phi_maps(&shift(d), &spec)?;
        for (dx, dy) in [(-0.01, 0.01), (0.004, -0.006), (-0.02, -0.005), (0.01, 0.002)] {
            let z = Complex::with_val(p, (a.to_f64() + dx, dy));
            worst = worst.max(theta_relation_residual(&maps, 32, &z)?.to_f64());
        }
    }
    v.check(worst < 1e-10, format!("θ-relation residual at 8 samples near a_cr: {worst:.1e}"));
    Ok(())
}

// ---------------------------------------------------------------- 8

fn criterion_8(v: &mut Verdict) -> Result<()> {
    let spec = P1Spec::new(512);
    let a = p1_solve(-30.0, -8.0, &spec)?;
    let series = tritronquee_series(200, 512)?;
    let z = Float::with_val(512, -20);
    let sv = series.eval(&z)?;
    let (y, _) = a.eval(&z)?;
    let dev = Float::with_val(512, y.real() - &sv.y).abs();
    v.check(dev <= sv.tail, format!("|y_ODE − y_series| at s=−20 = {:.1e} ≤ tail {:.1e}", dev.to_f64(), sv.tail.to_f64()));
    let hr = a.max_h_residual().to_f64();
    v.check(hr < 1e-15, format!("max |H′ + y| along [−30, −8] = {hr:.1e}"));
    let b = p1_solve(-40.0, -8.0, &spec)?;
    let hb = b.max_h_residual().to_f64();
    v.check(hb < 1e-15, format!("max |H′ + y| along [−40, −8] = {hb:.1e}"));
    let d = overlap_deviation(&a, &b, -25.0, -8.0)?.to_f64();
    v.check(d < 1e-12, format!("launch from −30 vs −40 over [−25, −8]: {d:.1e}"));
    Ok(())
}

// ---------------------------------------------------------------- 9, 10

const SSTAR: [f64; 9] = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];

fn extraction_runs() -> Result<Vec<Vec<ExtractionRecord>>> {
    let mut all = vec![];
    for n in [16u32, 32, 64] {
        let start = Instant::now();
        let mut recs = vec![];
        for s in SSTAR {
            recs.push(extract_at(n, s, 0.5, ds_precision(n))?);
        }
        println!("     extraction n={n} at {} bits: {:.1}s", ds_precision(n), start.elapsed().as_secs_f64());
        all.push(recs);
    }
    Ok(all)
}

fn re(z: &Option<Complex>) -> f64 {
    z.as_ref().map(|v| v.real().to_f64()).unwrap_or(f64::NAN)
}

fn criterion_9(v: &mut Verdict, runs: &[Vec<ExtractionRecord>]) -> Result<()> {
    let rep = pi_consistency_check(runs, 10.0)?;
    let spread = |recs: &[ExtractionRecord], i: usize| cdiff(recs[i].y_beta.as_ref().unwrap(), recs[i].y_a.as_ref().unwrap());
    for (recs, nc) in runs.iter().zip(rep.per_n.iter()) {
        let row: Vec<String> = (0..9).map(|i| format!("{:.4}", re(&recs[i].y_beta))).collect();
        v.note(format!("n={} y_β: {}", nc.n, row.join(" ")));
        let row: Vec<String> = (0..9).map(|i| format!("{:.4}", spread(recs, i))).collect();
        v.note(format!("n={} |y_β − y_a|: {}", nc.n, row.join(" ")));
    }
    let (r32, r64) = (&runs[1], &runs[2]);
    let mut below = true;
    let mut better = 0;
    for i in 0..9 {
        let y = abs(r64[i].y_beta.as_ref().unwrap()).to_f64();
        below &= spread(r64, i) < 0.25 * y.max(1.0);
        if spread(r64, i) < spread(r32, i) {
            better += 1;
        }
    }
    v.check(below, "(a) n=64 spread below 0.25·max(1,|y|) at all 9 points".into());
    v.check(better >= 7, format!("(a) n=64 spread smaller than n=32 at {better} of 9 points (need ≥ 7)"));

    let pts = &rep.per_n[2].points;
    let flagged: Vec<f64> = pts.iter().filter(|q| q.pole_suspect).map(|q| q.s_star.to_f64()).collect();
    v.note(format!("pole-suspect points (|y| > 10): {flagged:?}"));
    let mut pi_ok = true;
    let mut pi_row = vec![];
    let mut h_ok = true;
    let mut h_row = vec![];
    let mut hm_row = vec![];
    for (i, q) in pts.iter().enumerate() {
        if let Some(r) = &q.pi_residual {
            pi_ok &= r.to_f64() < 0.5;
            pi_row.push(format!("{:+.1}:{:.3}", q.s_star.to_f64(), r.to_f64()));
        }
        if let Some(r) = &q.h_residual {
            h_ok &= r.to_f64() < 0.5;
            h_row.push(format!("{:+.1}:{:.3}", q.s_star.to_f64(), r.to_f64()));
            let dh = (re(&r64[i + 1].h_gamma) - re(&r64[i - 1].h_gamma)) / 1.0;
            hm_row.push(format!("{:+.1}:{:.3}", q.s_star.to_f64(), (dh - re(&r64[i].y_beta)).abs()));
        }
    }
    v.check(pi_ok, format!("(b) n=64 |y″ − 6y² − s*| < 0.5 at non-flagged points: {}", pi_row.join(" ")));
    v.check(h_ok, format!("(c) n=64 |H′ + y| < 0.5: {}", h_row.join(" ")));
    v.note(format!("same data, |H′ − y|: {}", hm_row.join(" ")));
    Ok(())
}

fn criterion_10(v: &mut Verdict, runs: &[Vec<ExtractionRecord>]) -> Result<()> {
    // s* = 0 is t = t_cr exactly
    let p = 256;
    let (_, a, b) = closed_forms(p);
    let beta0 = Float::with_val(p, &b - &a).square() / 16u32;
    let a0 = Float::with_val(p, -&a);
    let mut dev = vec![];
    for recs in runs {
        let r = &recs[4];
        let beta = Complex::with_val(p, r.inputs.beta.as_ref().unwrap());
        let ann = Complex::with_val(p, r.inputs.a_nn.as_ref().unwrap());
        let db = cdiff(&beta, &Complex::with_val(p, &beta0));
        let da = cdiff(&ann, &Complex::with_val(p, &a0));
        v.note(format!(
            "n={}: β_nn(t_cr) = {:.6} (dev {db:.2e}), a_nn(t_cr) = {:.6} (dev {da:.2e})",
            r.n,
            beta.real().to_f64(),
            ann.real().to_f64()
        ));
        dev.push((db, da));
    }
    v.check((beta0.to_f64() - 2.027).abs() < 5e-4, format!("(b_cr − a_cr)²/16 = {:.4}", beta0.to_f64()));
    let shrinking = dev.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    v.check(shrinking, "deviations of β_nn and a_nn decrease with n".into());
    for (name, r) in [("β", dev[2].0 / dev[1].0), ("a", dev[2].1 / dev[1].1)] {
        v.check((0.55..=0.95).contains(&r), format!("{name}: deviation ratio n=64/n=32 = {r:.3} in [0.55, 0.95] (2^(-2/5) = 0.758)"));
    }
    Ok(())
}

// ---------------------------------------------------------------- driver

fn run(id: u32, title: &str, f: impl FnOnce(&mut Verdict) -> Result<()>) -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut v)));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(e)) => v.check(false, format!("error {}: {e}", e.code())),
        Err(_) => v.check(false, "panicked".into()),
    }
    let verdict = if v.pass { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {id}: {title} ({:.1}s)", start.elapsed().as_secs_f64());
    for l in v.lines.iter() {
        println!("       {l}");
    }
    v.pass
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("HP_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |id: u32| only.as_ref().map_or(true, |o| o.contains(&id));
    let mut results = vec![];
    let simple: [(u32, &str, fn(&mut Verdict) -> Result<()>); 8] = [
        (1, "critical constants", criterion_1),
        (2, "endpoints at t = 0", criterion_2),
        (3, "moments against the Bessel form, δ-independence", criterion_3),
        (4, "differential identities", criterion_4),
        (5, "Painlevé III from Hankel data", criterion_5),
        (6, "first integral", criterion_6),
        (7, "equilibrium measures and φ functions", criterion_7),
        (8, "Painlevé I engine", criterion_8),
    ];
    for (id, title, f) in simple {
        if wanted(id) {
            results.push((id, run(id, title, f)));
        }
    }
    if wanted(9) || wanted(10) {
        match extraction_runs() {
            Ok(runs) => {
                if wanted(9) {
                    results.push((9, run(9, "double-scaling consistency at α = 1/2", |v| criterion_9(v, &runs))));
                }
                if wanted(10) {
                    results.push((10, run(10, "leading-order anchors at t_cr", |v| criterion_10(v, &runs))));
                }
            }
            Err(e) => {
                for id in [9, 10].into_iter().filter(|&i| wanted(i)) {
                    println!("FAIL criterion {id}: extraction failed: {e}");
                    results.push((id, false));
                }
            }
        }
    }
    let failed: Vec<u32> = results.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    println!("acceptance: {} of {} criteria pass; failing: {failed:?}", results.len() - failed.len(), results.len());
    if !failed.is_empty() && std::env::var("HP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
