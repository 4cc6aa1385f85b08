//! Drives the `hp` pipeline in-process and prints the JSON envelope.

use hankel_painleve::cli::{execute, MomentCache, RunConfig};

fn main() {
    let mut cfg = RunConfig::new("equilibrium");
    cfg.t = 0.0;
    let (env, _) = execute(&cfg, &MomentCache::in_dir(None));
    println!("{}", serde_json::to_string_pretty(&env).unwrap());
}
