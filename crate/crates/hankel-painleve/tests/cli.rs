use hankel_painleve::cli::{parse_grid, parse_n_list, MomentCache, RunConfig, Status};
use hankel_painleve::weight::WeightParams;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn hp(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hp")).args(args).env("HP_CACHE_DIR", cache).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["moments", "--prec", "64"][..],
        &["moments", "--tol", "0"],
        &["moments", "--bogus"],
        &["nonsense"],
        &["consistency", "--sstar-grid", "-2:2"],
        &["consistency", "--n-list", "16,x"],
        &[],
    ] {
        let out = hp(args, dir.path());
        assert_eq!(out.status.code(), Some(64), "{args:?}");
    }
    assert_eq!(hp(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(hp(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn equilibrium_at_zero_and_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = hp(&["equilibrium", "--t", "0", "--prec", "256"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let env = json(&out);
    let a = num(&env["payload"]["a"]["value"]);
    let b = num(&env["payload"]["b"]["value"]);
    assert!((a - (3.0 - 8f64.sqrt())).abs() < 1e-15);
    assert!((b - (3.0 + 8f64.sqrt())).abs() < 1e-15);
    assert!(env["payload"]["a"]["err"].is_string());
    assert_eq!(env["status"]["state"], "ok");
    assert_eq!(env["config"]["t"], "0");
    assert!(env["timing_seconds"].is_null());

    let saved = dir.path().join("eq.json");
    std::fs::write(&saved, &out.stdout).unwrap();
    let again = hp(&["--config", saved.to_str().unwrap()], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn moments_example_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let file = dir.path().join("m.json");
    let args = [
        "moments", "--n", "4", "--t", "-0.0507", "--alpha", "0.5", "--delta", "0.0381", "--jmax", "8", "--prec", "512",
        "--out", file.to_str().unwrap(),
    ];
    let out = hp(&args, &cache);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(&file).unwrap();
    let env: Value = serde_json::from_slice(&first).unwrap();
    let entries = env["payload"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 9);
    for e in entries {
        assert!(e["re"].is_string() && e["im"].is_string() && e["err"].is_string());
        assert!(num(&e["err"]) < 1e-100);
    }
    assert_eq!(env["certificates"].as_array().unwrap().len(), 9);
    let cached: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(cached.len(), 1);
    // served from the cache the second time, same bytes
    hp(&args, &cache);
    assert_eq!(std::fs::read(&file).unwrap(), first);
}

#[test]
fn cache_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let w = WeightParams::new(3, 0.1, 0.5, 256);
    let fresh = MomentCache::in_dir(Some(dir.path())).table(&w, -1, 7).unwrap();
    let loaded = MomentCache::in_dir(Some(dir.path())).table(&w, -1, 7).unwrap();
    for (x, y) in fresh.entries.iter().zip(loaded.entries.iter()) {
        assert_eq!(x.j, y.j);
        assert_eq!(x.value, y.value);
        assert_eq!(x.err, y.err);
    }
    let other = WeightParams::new(3, 0.1, 0.5, 320);
    assert_ne!(MomentCache::key(&w, -1, 7), MomentCache::key(&other, -1, 7));
    assert_ne!(MomentCache::key(&w, -1, 7), MomentCache::key(&w, 0, 7));
}

#[test]
fn csv_has_a_header_and_an_envelope_beside_it() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rec.csv");
    let out = hp(&["recurrence", "--n", "3", "--t", "0.1", "--k", "3", "--format", "csv", "--out", file.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&file).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("k,re_gamma2,im_gamma2"));
    assert_eq!(lines.count(), 4);
    let env: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec.csv.json")).unwrap()).unwrap();
    assert_eq!(env["config"]["format"], "csv");
}

#[test]
fn pole_is_a_warning_and_domain_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hp(&["p1-solve", "--s-start", "-24", "--s-end", "6"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let env = json(&out);
    assert_eq!(env["status"]["code"], "POLE_ENCOUNTERED");
    let x = num(&env["payload"]["pole"]["estimate"]["re"]);
    assert!(x > 1.0 && x < 4.0);

    // the regular measure does not exist below t_cr
    let out = hp(&["equilibrium", "--t", "-0.06", "--mode", "regular", "--prec", "128"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"]["state"], "error");
}

#[test]
fn grids_and_lists() {
    assert_eq!(parse_grid("-2:2:9").unwrap().len(), 9);
    assert_eq!(parse_grid("-2:2:9").unwrap()[4], 0.0);
    assert_eq!(parse_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
    assert_eq!(parse_grid("3:4:1").unwrap(), vec![3.0]);
    assert!(parse_grid("1:2:0").is_err());
    assert!(parse_grid("a").is_err());
    assert_eq!(parse_n_list("16, 32,64").unwrap(), vec![16, 32, 64]);
    assert!(parse_n_list("0").is_err());
}

#[test]
fn config_validation_and_status_codes() {
    let mut c = RunConfig::new("moments");
    assert!(c.validate().is_ok());
    c.prec = 127;
    assert!(c.validate().is_err());
    let c = RunConfig { tol: -1.0, ..RunConfig::new("moments") };
    assert!(c.validate().is_err());
    assert!(RunConfig::new("nope").validate().is_err());
    assert_eq!(Status::Ok.exit_code(), 0);
    assert_eq!(Status::Warning { code: "POLE_SUSPECT".into(), message: String::new() }.exit_code(), 2);
    assert_eq!(Status::Error { code: "DOMAIN".into(), message: String::new() }.exit_code(), 1);
}
