//! The `hp` front end: argument parsing, run configuration, report envelopes
//! with decimal-string numbers, CSV mirrors and the on-disk moment cache.

use crate::equilibrium::{
    critical_constants, g_and_l, phi_maps, sign_region_check, theta_relation_residual,
    variational_gap, DensityMode, DensityModel, GridSpec,
};
use crate::error::{Error, Result};
use crate::numkernel::{abs, log10_float, pow2, powi, QuadratureSpec, StepPolicy};
use crate::orthopoly::{
    hankel_logdet, identity_suite, log_diff, orthogonality_residual, recurrence_range, three_term_residual,
};
use crate::painleve1::{
    ds_precision, extract_suite, finite_n_inputs_from, p1_solve, pi_consistency_check, t_for_s_star,
    ExtractionRecord, P1Spec,
};
use crate::painleve3::{first_integral_check, p3_solve_from_hankel, p3_verify, u_transform_check};
use crate::weight::{moment_table, MomentEntry, MomentTable, WeightParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_WARNING: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// |y| above which an extracted point is treated as sitting near a pole.
pub const POLE_CAP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Regular,
    Signed,
    Critical,
}

impl From<Mode> for DensityMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Regular => DensityMode::Regular,
            Mode::Signed => DensityMode::Signed,
            Mode::Critical => DensityMode::Critical,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hp", version, about = "Hankel determinants, equilibrium measures and Painlevé I/III checks")]
struct Cli {
    /// re-run the configuration echoed in a previous report (or a bare config file)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 4)]
    n: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    alpha: f64,
    /// circle radius; a_cr/2 when omitted
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 256)]
    prec: u32,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// record wall-clock time in the envelope (makes output run-dependent)
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Contour moments μ_j with error estimates
    Moments {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        jmin: i64,
        #[arg(long, default_value_t = 8)]
        jmax: i64,
    },
    /// log D_k with a two-precision agreement certificate
    Hankel {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 4)]
        k: u32,
    },
    /// Recurrence coefficients for degrees 0..=k
    Recurrence {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 4)]
        k: u32,
    },
    /// Differential identities for D_k
    Identities {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
    /// Painlevé III: ODE against Hankel data, u-transform, first integral
    P3Verify {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value = "0.05:0.5:11", allow_hyphen_values = true)]
        t_grid: String,
        #[arg(long, default_value_t = 0.0125)]
        t_fit: f64,
    },
    /// Equilibrium measure at t
    Equilibrium {
        #[command(flatten)]
        c: Common,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Sign regions of Re φ_t, local law, θ relation and q(a_cr)
    PhiMap {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = 13)]
        nx: usize,
        #[arg(long, default_value_t = 7)]
        ny: usize,
    },
    /// Real tronquée Painlevé I solution from the asymptotic series
    P1Solve {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value_t = -30.0, allow_hyphen_values = true)]
        s_start: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s_end: f64,
    },
    /// y and H estimates from degree-n recurrence data at one t (or s*)
    DsExtract {
        #[command(flatten)]
        c: Common,
        #[arg(long, allow_hyphen_values = true)]
        sstar: Option<f64>,
    },
    /// Cross-source and Painlevé I consistency over n and an s* grid
    Consistency {
        #[command(flatten)]
        c: Common,
        #[arg(long, default_value = "16,32,64")]
        n_list: String,
        #[arg(long, default_value = "-2:2:9", allow_hyphen_values = true)]
        sstar_grid: String,
    },
    /// A light run of every command, sharing moment tables
    ReportAll {
        #[command(flatten)]
        c: Common,
    },
}

// JSON carries numbers as decimal strings; f64 Display is the shortest
// representation that parses back to the same value.
mod num_str {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        S(String),
        F(f64),
    }

    fn parse<E: Error>(r: Raw) -> Result<f64, E> {
        match r {
            Raw::S(s) => s.trim().parse().map_err(E::custom),
            Raw::F(x) => Ok(x),
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Raw::deserialize(d)?)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => s.serialize_some(&v.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Raw>::deserialize(d)?.map(parse).transpose()
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub n: u32,
    #[serde(with = "num_str")]
    pub t: f64,
    #[serde(with = "num_str")]
    pub alpha: f64,
    #[serde(with = "num_str::opt", default)]
    pub delta: Option<f64>,
    pub prec: u32,
    #[serde(with = "num_str")]
    pub tol: f64,
    pub k: Option<u32>,
    pub jmin: Option<i64>,
    pub jmax: Option<i64>,
    pub t_grid: Option<String>,
    #[serde(with = "num_str::opt", default)]
    pub t_fit: Option<f64>,
    pub mode: Option<Mode>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    #[serde(with = "num_str::opt", default)]
    pub s_start: Option<f64>,
    #[serde(with = "num_str::opt", default)]
    pub s_end: Option<f64>,
    #[serde(with = "num_str::opt", default)]
    pub sstar: Option<f64>,
    pub n_list: Option<String>,
    pub sstar_grid: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(default)]
    pub timing: bool,
}

pub const COMMANDS: [&str; 11] = [
    "moments",
    "hankel",
    "recurrence",
    "identities",
    "p3-verify",
    "equilibrium",
    "phi-map",
    "p1-solve",
    "ds-extract",
    "consistency",
    "report-all",
];

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            n: 4,
            t: 0.0,
            alpha: 0.5,
            delta: None,
            prec: 256,
            tol: 1e-8,
            k: None,
            jmin: None,
            jmax: None,
            t_grid: None,
            t_fit: None,
            mode: None,
            nx: None,
            ny: None,
            s_start: None,
            s_end: None,
            sstar: None,
            n_list: None,
            sstar_grid: None,
            out: None,
            format: Format::Json,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !COMMANDS.contains(&self.command.as_str()) {
            return Err(Error::Usage(format!("unknown command {}", self.command)));
        }
        if self.prec < 128 {
            return Err(Error::Usage("precision must be at least 128 bits".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Usage("tolerance must be positive".into()));
        }
        if self.n < 1 {
            return Err(Error::Usage("n must be at least 1".into()));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::Usage("delta must be positive".into()));
            }
        }
        for g in [&self.t_grid, &self.sstar_grid].into_iter().flatten() {
            parse_grid(g)?;
        }
        if let Some(l) = &self.n_list {
            parse_n_list(l)?;
        }
        Ok(())
    }

    pub fn weight(&self) -> WeightParams {
        let mut w = WeightParams::new(self.n, 0.0, 0.0, self.prec);
        w.t = fl(self.prec, self.t);
        w.alpha = Complex::with_val(self.prec, (fl(self.prec, self.alpha), 0));
        if let Some(d) = self.delta {
            w.delta = fl(self.prec, d);
        }
        w
    }

    fn from_cmd(cmd: Cmd) -> Self {
        fn base(name: &str, c: &Common) -> RunConfig {
            let mut r = RunConfig::new(name);
            r.n = c.n;
            r.t = c.t;
            r.alpha = c.alpha;
            r.delta = c.delta;
            r.prec = c.prec;
            r.tol = c.tol;
            r.out = c.out.clone();
            r.format = c.format;
            r.timing = c.timing;
            r
        }
        match cmd {
            Cmd::Moments { c, jmin, jmax } => RunConfig { jmin: Some(jmin), jmax: Some(jmax), ..base("moments", &c) },
            Cmd::Hankel { c, k } => RunConfig { k: Some(k), ..base("hankel", &c) },
            Cmd::Recurrence { c, k } => RunConfig { k: Some(k), ..base("recurrence", &c) },
            Cmd::Identities { c, k } => RunConfig { k: Some(k), ..base("identities", &c) },
            Cmd::P3Verify { c, k, t_grid, t_fit } => {
                RunConfig { k: Some(k), t_grid: Some(t_grid), t_fit: Some(t_fit), ..base("p3-verify", &c) }
            }
            Cmd::Equilibrium { c, mode } => RunConfig { mode, ..base("equilibrium", &c) },
            Cmd::PhiMap { c, nx, ny } => RunConfig { nx: Some(nx), ny: Some(ny), ..base("phi-map", &c) },
            Cmd::P1Solve { c, s_start, s_end } => {
                RunConfig { s_start: Some(s_start), s_end: Some(s_end), ..base("p1-solve", &c) }
            }
            Cmd::DsExtract { c, sstar } => RunConfig { sstar, ..base("ds-extract", &c) },
            Cmd::Consistency { c, n_list, sstar_grid } => {
                RunConfig { n_list: Some(n_list), sstar_grid: Some(sstar_grid), ..base("consistency", &c) }
            }
            Cmd::ReportAll { c } => base("report-all", &c),
        }
    }
}

/// The decimal the user typed, not its binary neighbour.
pub fn fl(prec: u32, x: f64) -> Float {
    Float::with_val(prec, Float::parse(x.to_string()).expect("f64 display parses"))
}

/// "lo:hi:count" → count equispaced points, or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Usage(format!("malformed grid '{s}' (want lo:hi:count or a comma list)"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let m: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if m == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        if m == 1 {
            return Ok(vec![lo]);
        }
        return Ok((0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect());
    }
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(v)
}

pub fn parse_n_list(s: &str) -> Result<Vec<u32>> {
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("malformed n list '{s}'")))?;
    if v.is_empty() || v.contains(&0) {
        return Err(Error::Usage(format!("malformed n list '{s}'")));
    }
    Ok(v)
}

// ---------------------------------------------------------------- envelope

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum Status {
    Ok,
    Warning { code: String, message: String },
    Error { code: String, message: String },
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Warning { .. } => EXIT_WARNING,
            Status::Error { .. } => EXIT_ERROR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub quantity: String,
    pub prec: u32,
    #[serde(with = "num_str")]
    pub digits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    #[serde(with = "num_str::opt", default)]
    pub timing_seconds: Option<f64>,
    pub certificates: Vec<CertificateEntry>,
    pub payload: Value,
    pub status: Status,
}

/// A flat table mirrored to CSV; the header names roles and units.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for r in self.rows.iter() {
            wr.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

struct Outcome {
    payload: Value,
    certificates: Vec<CertificateEntry>,
    table: Option<CsvTable>,
    status: Status,
}

impl Outcome {
    fn ok(payload: Value) -> Self {
        Outcome { payload, certificates: vec![], table: None, status: Status::Ok }
    }
}

fn digits_for(prec: u32) -> usize {
    (f64::from(prec) * std::f64::consts::LOG10_2).floor() as usize
}

/// Decimal string at the digits the working precision carries.
pub fn dec(x: &Float) -> String {
    x.to_string_radix(10, Some(digits_for(x.prec()).max(2)))
}

fn short(x: &Float) -> String {
    x.to_string_radix(10, Some(6))
}

fn num(x: &Float, err: &Float) -> Value {
    json!({ "value": dec(x), "err": short(err) })
}

fn cnum(z: &Complex, err: &Float) -> Value {
    json!({ "re": dec(z.real()), "im": dec(z.imag()), "err": short(err) })
}

/// Rounding-level error bound for quantities without a propagated estimate.
fn ulp_err(z: &Complex) -> Float {
    let p = z.prec().0;
    abs(z) * pow2(p, 8 - p as i32)
}

fn cw(z: &Complex) -> Value {
    cnum(z, &ulp_err(z))
}

fn rw(x: &Float) -> Value {
    let p = x.prec();
    let e = Float::with_val(p, x.abs_ref()) * pow2(p, 8 - p as i32);
    num(x, &e)
}

fn resid(x: &Float) -> Value {
    json!(short(x))
}

// ---------------------------------------------------------------- cache

/// Moment tables keyed by (parameters, precision, range). On disk under
/// HP_CACHE_DIR when set, always in memory for the life of the process.
pub struct MomentCache {
    dir: Option<PathBuf>,
    mem: RefCell<HashMap<String, MomentTable>>,
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    j: i64,
    re: String,
    im: String,
    err: String,
}

#[derive(Serialize, Deserialize)]
struct StoredTable {
    key: String,
    jmin: i64,
    cutoff: String,
    entries: Vec<StoredEntry>,
}

fn hexf(x: &Float) -> String {
    x.to_string_radix(16, None)
}

fn parse_hex(s: &str, prec: u32) -> Result<Float> {
    let v = Float::parse_radix(s, 16).map_err(|e| Error::Io(format!("cache entry: {e}")))?;
    Ok(Float::with_val(prec, v))
}

impl MomentCache {
    pub fn from_env() -> Self {
        let dir = std::env::var_os("HP_CACHE_DIR").map(PathBuf::from);
        MomentCache { dir, mem: RefCell::new(HashMap::new()) }
    }

    pub fn in_dir(dir: Option<&Path>) -> Self {
        MomentCache { dir: dir.map(Path::to_path_buf), mem: RefCell::new(HashMap::new()) }
    }

    pub fn key(w: &WeightParams, jmin: i64, jmax: i64) -> String {
        let canon = format!(
            "v1|n={}|t={}|alpha={},{}|delta={}|prec={}|j={}..{}",
            w.n,
            hexf(&w.t),
            hexf(w.alpha.real()),
            hexf(w.alpha.imag()),
            hexf(&w.delta),
            w.prec(),
            jmin,
            jmax
        );
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("moments-{key}.json")))
    }

    fn load(&self, key: &str, w: &WeightParams) -> Result<Option<MomentTable>> {
        let Some(path) = self.path(key) else { return Ok(None) };
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)?;
        let st: StoredTable = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
        if st.key != key {
            return Ok(None);
        }
        let p = w.prec();
        let mut entries = vec![];
        for e in st.entries {
            let value = Complex::with_val(p, (parse_hex(&e.re, p)?, parse_hex(&e.im, p)?));
            entries.push(MomentEntry { j: e.j, value, err: parse_hex(&e.err, p)? });
        }
        Ok(Some(MomentTable { params: w.clone(), jmin: st.jmin, entries, cutoff: parse_hex(&st.cutoff, p)? }))
    }

    fn store(&self, key: &str, tab: &MomentTable) -> Result<()> {
        let Some(path) = self.path(key) else { return Ok(()) };
        if let Some(d) = path.parent() {
            std::fs::create_dir_all(d)?;
        }
        let st = StoredTable {
            key: key.to_string(),
            jmin: tab.jmin,
            cutoff: hexf(&tab.cutoff),
            entries: tab
                .entries
                .iter()
                .map(|e| StoredEntry { j: e.j, re: hexf(e.value.real()), im: hexf(e.value.imag()), err: hexf(&e.err) })
                .collect(),
        };
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(&st).map_err(|e| Error::Io(e.to_string()))?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn table(&self, w: &WeightParams, jmin: i64, jmax: i64) -> Result<MomentTable> {
        let key = Self::key(w, jmin, jmax);
        if let Some(t) = self.mem.borrow().get(&key) {
            return Ok(t.clone());
        }
        let tab = match self.load(&key, w)? {
            Some(t) => t,
            None => {
                let t = moment_table(w, jmin, jmax, &QuadratureSpec::new(w.prec()))?;
                self.store(&key, &t)?;
                t
            }
        };
        self.mem.borrow_mut().insert(key, tab.clone());
        Ok(tab)
    }
}

// ---------------------------------------------------------------- commands

fn cmd_moments(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    let (jmin, jmax) = (cfg.jmin.unwrap_or(0), cfg.jmax.unwrap_or(8));
    if jmin > jmax {
        return Err(Error::Usage("jmin exceeds jmax".into()));
    }
    let tab = cache.table(&cfg.weight(), jmin, jmax)?;
    let mut table = CsvTable::new(&["j", "re_mu", "im_mu", "err_abs"]);
    let mut entries = vec![];
    let mut certs = vec![];
    for e in tab.entries.iter() {
        entries.push(json!({ "j": e.j, "re": dec(e.value.real()), "im": dec(e.value.imag()), "err": short(&e.err) }));
        table.rows.push(vec![e.j.to_string(), dec(e.value.real()), dec(e.value.imag()), short(&e.err)]);
        let digits = if e.err.is_zero() { digits_for(tab.prec()) as f64 } else { log10_float(&abs(&e.value)) - log10_float(&e.err) };
        certs.push(CertificateEntry { quantity: format!("mu_{}", e.j), prec: tab.prec(), digits: (digits * 10.0).floor() / 10.0 });
    }
    let payload = json!({ "entries": entries, "cutoff": dec(&tab.cutoff) });
    Ok(Outcome { payload, certificates: certs, table: Some(table), status: Status::Ok })
}

fn cmd_hankel(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    let k = cfg.k.unwrap_or(4) as usize;
    let w = cfg.weight();
    let top = 2 * k as i64 + 1;
    let lo = hankel_logdet(k, &cache.table(&w, -1, top)?)?;
    let w2 = w.at_prec(2 * cfg.prec);
    let hi = hankel_logdet(k, &cache.table(&w2, -1, top)?)?;
    let d = log_diff(&lo.log_det, &Complex::with_val(cfg.prec, &hi.log_det));
    let err = abs(&d).max(&ulp_err(&lo.log_det));
    let digits = if err.is_zero() { digits_for(cfg.prec) as f64 } else { -log10_float(&err) };
    let cert = CertificateEntry { quantity: format!("log_D_{k}"), prec: 2 * cfg.prec, digits: (digits * 10.0).floor() / 10.0 };
    let payload = json!({
        "k": k,
        "log_det": cnum(&lo.log_det, &err),
        "det": cnum(&lo.det(), &Float::with_val(cfg.prec, &err * abs(&lo.det()))),
    });
    let mut table = CsvTable::new(&["k", "re_log_det", "im_log_det", "err_abs"]);
    table.rows.push(vec![k.to_string(), dec(lo.log_det.real()), dec(lo.log_det.imag()), short(&err)]);
    let status = if digits < -cfg.tol.log10() {
        Status::Warning { code: "LOW_AGREEMENT".into(), message: format!("{digits:.1} digits agree between {} and {} bits", cfg.prec, 2 * cfg.prec) }
    } else {
        Status::Ok
    };
    Ok(Outcome { payload, certificates: vec![cert], table: Some(table), status })
}

fn cmd_recurrence(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    let k = cfg.k.unwrap_or(4) as usize;
    let tab = cache.table(&cfg.weight(), -1, 2 * k as i64 + 1)?;
    let rec = recurrence_range(0, k, &tab)?;
    let mut entries = vec![];
    let mut table = CsvTable::new(&["k", "re_gamma2", "im_gamma2", "re_alpha", "im_alpha", "re_beta", "im_beta", "re_a", "im_a"]);
    for e in rec.entries.iter() {
        let beta = e.beta.clone().unwrap_or_else(|| Complex::new(cfg.prec));
        entries.push(json!({
            "k": e.k,
            "gamma2": cw(&e.gamma2),
            "alpha": cw(&e.alpha),
            "beta": e.beta.as_ref().map(cw),
            "a": cw(&e.a),
        }));
        table.rows.push(vec![
            e.k.to_string(),
            dec(e.gamma2.real()),
            dec(e.gamma2.imag()),
            dec(e.alpha.real()),
            dec(e.alpha.imag()),
            dec(beta.real()),
            dec(beta.imag()),
            dec(e.a.real()),
            dec(e.a.imag()),
        ]);
    }
    let mut checks = vec![];
    for kk in 1..k {
        checks.push(json!({
            "k": kk,
            "orthogonality": resid(&orthogonality_residual(kk, &rec, &tab)?),
            "three_term": resid(&three_term_residual(kk, &rec)?),
        }));
    }
    Ok(Outcome { table: Some(table), ..Outcome::ok(json!({ "entries": entries, "checks": checks })) })
}

fn tolerance_status(worst: f64, tol: f64, what: &str) -> Status {
    if worst < tol {
        Status::Ok
    } else {
        Status::Warning { code: "TOLERANCE_EXCEEDED".into(), message: format!("{what}: {worst:.3e} ≥ {tol:.1e}") }
    }
}

fn cmd_identities(cfg: &RunConfig) -> Result<Outcome> {
    let k = cfg.k.unwrap_or(1) as usize;
    let r = identity_suite(k, &cfg.weight(), &QuadratureSpec::new(cfg.prec), &StepPolicy::for_precision(cfg.prec))?;
    let worst = r.worst();
    let payload = json!({
        "k": k,
        "a_vs_Y": resid(&r.a_y),
        "dH_vs_Y": resid(&r.dh_y),
        "beta_vs_H": resid(&r.beta_h),
        "H_vs_sum_a": resid(&r.h_sum_a),
        "dp_cross": resid(&r.dp_cross),
        "gamma2_routes": resid(&r.gamma2_routes),
        "det_Y": resid(&r.det_y),
        "H": cnum(&r.derivatives.h.value, &r.derivatives.h.err),
        "worst": resid(&worst),
    });
    let mut table = CsvTable::new(&["identity", "relative_residual"]);
    for (name, v) in [("a_vs_Y", &r.a_y), ("dH_vs_Y", &r.dh_y), ("beta_vs_H", &r.beta_h), ("H_vs_sum_a", &r.h_sum_a)] {
        table.rows.push(vec![name.to_string(), short(v)]);
    }
    let status = tolerance_status(worst.to_f64(), cfg.tol, "worst identity residual");
    Ok(Outcome { payload, certificates: vec![], table: Some(table), status })
}

fn cmd_p3_verify(cfg: &RunConfig) -> Result<Outcome> {
    let k = cfg.k.unwrap_or(1);
    let p = cfg.prec;
    let spec = QuadratureSpec::new(p);
    let grid: Vec<Float> = parse_grid(cfg.t_grid.as_deref().unwrap_or("0.05:0.5:11"))?.into_iter().map(|x| fl(p, x)).collect();
    let w = cfg.weight();
    let t_fit = fl(p, cfg.t_fit.unwrap_or(0.0125));
    let far = grid.iter().max_by(|a, b| a.partial_cmp(b).unwrap()).cloned().unwrap_or_else(|| Float::with_val(p, 0.5));
    let traj = p3_solve_from_hankel(k, &w, &t_fit, &far, &spec, cfg.tol * 1e-6)?;
    let pts = p3_verify(k, &w, &traj, &grid, &spec)?;
    let policy = StepPolicy::for_precision(p);
    let upts = u_transform_check(k, &w, &grid, &spec, &policy)?;
    let fi = first_integral_check(k, &w, &spec, &policy)?;
    let mut table = CsvTable::new(&["t", "re_a_hankel", "im_a_hankel", "re_a_ode", "im_a_ode", "deviation", "hankel_ode_residual", "u_transform_residual"]);
    let mut points = vec![];
    let mut worst = 0f64;
    for (pt, u) in pts.iter().zip(upts.iter()) {
        worst = worst.max(pt.deviation.to_f64());
        points.push(json!({
            "t": dec(&pt.t),
            "a_hankel": cw(&pt.a_hankel),
            "a_ode": cnum(&pt.a_ode, &Float::with_val(p, abs(&pt.a_ode) * (cfg.tol * 1e-12))),
            "deviation": resid(&pt.deviation),
            "hankel_ode_residual": resid(&pt.hankel_residual),
            "u_transform_residual": resid(&u.residual),
        }));
        table.rows.push(vec![
            dec(&pt.t),
            dec(pt.a_hankel.real()),
            dec(pt.a_hankel.imag()),
            dec(pt.a_ode.real()),
            dec(pt.a_ode.imag()),
            short(&pt.deviation),
            short(&pt.hankel_residual),
            short(&u.residual),
        ]);
    }
    let payload = json!({
        "k": k,
        "launch": { "t_fit": dec(&t_fit), "log_coefficient": cw(&traj.series.b_const), "c2": cw(&traj.series.c2()) },
        "points": points,
        "first_integral": { "t": dec(&w.t), "residual": resid(&fi.residual) },
    });
    let status = tolerance_status(worst, cfg.tol, "ODE vs Hankel deviation");
    Ok(Outcome { payload, certificates: vec![], table: Some(table), status })
}

fn cmd_equilibrium(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.prec;
    let t = fl(p, cfg.t);
    let cc = critical_constants(p);
    let mode = cfg.mode.unwrap_or(if t >= cc.t_cr { Mode::Regular } else { Mode::Signed });
    let spec = QuadratureSpec::new(p);
    let model = DensityModel::build(&t, mode.into())?;
    let mass = model.mass(&spec)?;
    let (lo, hi) = model.support();
    let mut payload = json!({
        "mode": mode,
        "a": rw(&lo),
        "b": rw(&hi),
        "mass": rw(&mass),
        "critical": { "t_cr": rw(&cc.t_cr), "a_cr": rw(&cc.a_cr), "b_cr": rw(&cc.b_cr) },
    });
    match &model {
        DensityModel::Regular(e) => {
            payload["c"] = rw(&e.c);
            payload["positive"] = json!(e.positive);
            payload["residual"] = resid(&e.residual);
        }
        DensityModel::Signed(s) => {
            payload["d0"] = rw(&s.d0);
            payload["d1"] = rw(&s.d1);
            payload["residual"] = resid(&s.residual);
            let (m, lag) = g_and_l(s, &spec)?;
            let x = Float::with_val(p, &s.b + 1u32);
            let gap = variational_gap(&m, &x, &t, &lag.l, &spec)?;
            payload["l"] = rw(&lag.l);
            payload["euler_lagrange_spread"] = resid(&lag.spread);
            payload["variational_gap_at_b_plus_1"] = rw(&gap);
        }
        DensityModel::Critical(_) => {}
    }
    let mut table = CsvTable::new(&["x", "density"]);
    let width = Float::with_val(p, &hi - &lo);
    for i in 1..40 {
        let x = Float::with_val(p, &width * i) / 40u32 + &lo;
        table.rows.push(vec![short(&x), short(&model.eval(&x)?)]);
    }
    let err = Float::with_val(p, &mass - 1u32).abs().to_f64();
    let status = tolerance_status(err, cfg.tol, "mass − 1");
    Ok(Outcome { payload, certificates: vec![], table: Some(table), status })
}

fn cmd_phi_map(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.prec;
    let t = fl(p, cfg.t);
    let maps = phi_maps(&t, &QuadratureSpec::new(p))?;
    let grid = GridSpec { nx: cfg.nx.unwrap_or(13), ny: cfg.ny.unwrap_or(7), log_decades: 2, ..GridSpec::default() };
    // signs need far less precision than the local checks
    let coarse = phi_maps(&Float::with_val(128, &t), &QuadratureSpec::new(128))?;
    let (region, status) = match sign_region_check(&coarse, &grid) {
        Ok(r) => (Some(r), Status::Ok),
        Err(e @ Error::AssertionFailed { .. }) => (None, Status::Warning { code: e.code().into(), message: e.to_string() }),
        Err(e) => return Err(e),
    };
    let a = maps.consts.a_cr.clone();
    let lead = Float::with_val(p, &maps.consts.b_cr - &a).sqrt() / (Float::with_val(p, a.square_ref()) * 5u32);
    let mut local = vec![];
    for ang in [2.0f64, std::f64::consts::PI, 2.0 * std::f64::consts::PI - 2.0] {
        let dz = Complex::with_val(p, (1e-4 * ang.cos(), 1e-4 * ang.sin()));
        let z = Complex::with_val(p, &dz + &a);
        let root = Complex::with_val(p, (0, ang / 2.0)).exp() * 1e-2f64;
        let model = Complex::with_val(p, (0, 1)) * powi(&root, 5) * &lead;
        let r = maps.phi_cr(&z, None)? / model;
        local.push(json!({ "arg": ang.to_string(), "ratio": cw(&r) }));
    }
    let mut theta = vec![];
    for (dx, dy) in [(-0.01, 0.01), (0.004, -0.006), (-0.02, -0.005)] {
        let z = Complex::with_val(p, (a.to_f64() + dx, dy));
        theta.push(json!({ "z": cw(&z), "residual": resid(&theta_relation_residual(&maps, cfg.n, &z)?) }));
    }
    let q = if maps.t().clone() == maps.consts.t_cr { Complex::new(p) } else { maps.q_at_acr()? };
    let mut payload = json!({
        "local_law": local,
        "theta_relation": theta,
        "q_at_a_cr": cw(&q),
        "q_at_a_cr_first_order": rw(&maps.q_at_acr_closed()),
        "s_star": rw(&maps.s_star(cfg.n)),
    });
    let mut table = CsvTable::new(&["x", "y", "sign_re_phi_t"]);
    if let Some(r) = &region {
        payload["checks"] = json!(r.checks.iter().map(|(k, v)| json!({ "check": k, "ok": v })).collect::<Vec<_>>());
        payload["grid_points"] = json!(r.points.len());
        for pt in r.points.iter() {
            table.rows.push(vec![pt.x.to_string(), pt.y.to_string(), pt.sign.to_string()]);
        }
    }
    Ok(Outcome { payload, certificates: vec![], table: Some(table), status })
}

fn cmd_p1_solve(cfg: &RunConfig) -> Result<Outcome> {
    let (s0, s1) = (cfg.s_start.unwrap_or(-30.0), cfg.s_end.unwrap_or(0.0));
    let prec = cfg.prec.max(512);
    let sol = p1_solve(s0, s1, &P1Spec::new(prec))?;
    let mut table = CsvTable::new(&["s", "y", "dy", "hamiltonian", "h_residual"]);
    let mut points = vec![];
    for pt in sol.points.iter() {
        table.rows.push(vec![short(&pt.s), dec(pt.y.real()), dec(pt.dy.real()), dec(pt.h.real()), short(&pt.h_residual)]);
        points.push(json!({ "s": dec(&pt.s), "y": cw(&pt.y), "dy": cw(&pt.dy), "H": cw(&pt.h), "h_residual": resid(&pt.h_residual) }));
    }
    let mut payload = json!({
        "s_start": dec(&sol.s_start),
        "initial": { "y": rw(&sol.initial.y), "dy": rw(&sol.initial.dy), "series_tail": resid(&sol.initial.tail), "terms": sol.initial.used },
        "points": points,
        "max_h_residual": resid(&sol.max_h_residual()),
    });
    let status = match &sol.pole {
        Some(pole) => {
            payload["pole"] = json!({ "estimate": cw(&pole.estimate), "reached": cw(&pole.reached) });
            Status::Warning {
                code: "POLE_ENCOUNTERED".into(),
                message: format!("integration stopped near a pole at s ≈ {:.6}", pole.estimate.real().to_f64()),
            }
        }
        None => Status::Ok,
    };
    Ok(Outcome { payload, certificates: vec![], table: Some(table), status })
}

fn extraction_json(r: &ExtractionRecord) -> Value {
    let o = |z: &Option<Complex>| z.as_ref().map(cw);
    json!({
        "n": r.n,
        "t": dec(&r.t),
        "s_star": dec(&r.s_star),
        "y_beta": o(&r.y_beta),
        "y_a": o(&r.y_a),
        "y_dh": o(&r.y_dh),
        "h_gamma": o(&r.h_gamma),
        "inputs": {
            "beta": o(&r.inputs.beta),
            "a_nn": o(&r.inputs.a_nn),
            "dh_dt": o(&r.inputs.dh_dt),
            "gamma2": o(&r.inputs.gamma2),
            "l": r.inputs.l.as_ref().map(rw),
        },
    })
}

fn extract_cached(n: u32, t: &Float, cfg: &RunConfig, prec: u32, cache: &MomentCache) -> Result<ExtractionRecord> {
    let cc = critical_constants(prec);
    let mut w = RunConfig { n, prec, ..cfg.clone() }.weight();
    w.t = Float::with_val(prec, t);
    let tab = cache.table(&w, -1, 2 * i64::from(n) + 1)?;
    let inputs = finite_n_inputs_from(&tab, &QuadratureSpec::new(prec))?;
    extract_suite(n, &w.t, &inputs, &cc)
}

fn cmd_ds_extract(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    let p = cfg.prec;
    let cc = critical_constants(p);
    let t = match cfg.sstar {
        Some(s) => t_for_s_star(cfg.n, &fl(p, s), &cc),
        None => fl(p, cfg.t),
    };
    let r = extract_cached(cfg.n, &t, cfg, p, cache)?;
    let mut table = CsvTable::new(&["n", "t", "s_star", "y_beta", "y_a_nn", "y_dH", "H_gamma2"]);
    let re = |z: &Option<Complex>| z.as_ref().map(|v| dec(v.real())).unwrap_or_default();
    table.rows.push(vec![r.n.to_string(), dec(&r.t), dec(&r.s_star), re(&r.y_beta), re(&r.y_a), re(&r.y_dh), re(&r.h_gamma)]);
    Ok(Outcome { table: Some(table), ..Outcome::ok(extraction_json(&r)) })
}

fn cmd_consistency(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    let ns = parse_n_list(cfg.n_list.as_deref().unwrap_or("16,32,64"))?;
    let grid = parse_grid(cfg.sstar_grid.as_deref().unwrap_or("-2:2:9"))?;
    let mut all = vec![];
    for &n in ns.iter() {
        let prec = cfg.prec.max(ds_precision(n));
        let cc = critical_constants(prec);
        let mut recs = vec![];
        for &s in grid.iter() {
            let t = t_for_s_star(n, &fl(prec, s), &cc);
            recs.push(extract_cached(n, &t, cfg, prec, cache)?);
        }
        all.push(recs);
    }
    let rep = pi_consistency_check(&all, POLE_CAP)?;
    let mut table = CsvTable::new(&["n", "s_star", "y_beta", "spread_a_nn", "spread_dH", "pi_residual", "h_residual", "pole_suspect"]);
    let mut per_n = vec![];
    for (nc, recs) in rep.per_n.iter().zip(all.iter()) {
        let mut pts = vec![];
        for (q, r) in nc.points.iter().zip(recs.iter()) {
            let o = |x: &Option<Float>| x.as_ref().map(short).unwrap_or_default();
            table.rows.push(vec![
                nc.n.to_string(),
                short(&q.s_star),
                dec(q.y.real()),
                o(&q.spread_a),
                o(&q.spread_dh),
                o(&q.pi_residual),
                o(&q.h_residual),
                q.pole_suspect.to_string(),
            ]);
            pts.push(json!({
                "s_star": short(&q.s_star),
                "y": cw(&q.y),
                "pole_suspect": q.pole_suspect,
                "spread_a_nn": q.spread_a.as_ref().map(resid),
                "spread_dH": q.spread_dh.as_ref().map(resid),
                "pi_residual": q.pi_residual.as_ref().map(resid),
                "h_residual": q.h_residual.as_ref().map(resid),
                "record": extraction_json(r),
            }));
        }
        per_n.push(json!({ "n": nc.n, "points": pts }));
    }
    let trend: Vec<Value> = rep
        .spread_trend
        .iter()
        .map(|(lo, hi, better, total)| json!({ "from": lo, "to": hi, "decreased": better, "total": total }))
        .collect();
    let status = if rep.has_pole_suspects() {
        Status::Warning { code: "POLE_SUSPECT".into(), message: format!("points with |y| > {POLE_CAP} excluded from the stencils") }
    } else {
        Status::Ok
    };
    let payload = json!({ "alpha": cfg.alpha.to_string(), "per_n": per_n, "spread_trend": trend, "pole_cap": POLE_CAP.to_string() });
    Ok(Outcome { payload, certificates: vec![], table: Some(table), status })
}

fn cmd_report_all(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    // moment-table consumers first, so later commands hit the cache
    let order = [
        "moments",
        "recurrence",
        "hankel",
        "ds-extract",
        "identities",
        "equilibrium",
        "phi-map",
        "p1-solve",
        "p3-verify",
    ];
    let mut payload = serde_json::Map::new();
    let mut certificates = vec![];
    let mut warnings = vec![];
    for name in order {
        let mut sub = cfg.clone();
        sub.command = name.to_string();
        sub.out = None;
        sub.k = Some(cfg.k.unwrap_or(cfg.n));
        sub.jmin = Some(-1);
        sub.jmax = Some(2 * i64::from(cfg.n) + 1);
        if name == "p3-verify" {
            sub.k = Some(1);
            sub.t_grid = Some("0.1:0.3:3".into());
        }
        if name == "identities" {
            sub.k = Some(1);
        }
        if name == "phi-map" {
            sub.nx = Some(9);
            sub.ny = Some(5);
        }
        let out = dispatch(&sub, cache);
        match out {
            Ok(o) => {
                certificates.extend(o.certificates);
                if let Status::Warning { code, .. } = &o.status {
                    warnings.push(format!("{name}: {code}"));
                }
                payload.insert(name.to_string(), json!({ "status": o.status, "payload": o.payload }));
            }
            Err(e) => {
                warnings.push(format!("{name}: {}", e.code()));
                payload.insert(name.to_string(), json!({ "status": Status::Error { code: e.code().into(), message: e.to_string() } }));
            }
        }
    }
    let status = if warnings.is_empty() {
        Status::Ok
    } else {
        Status::Warning { code: "SUBCOMMAND_ISSUES".into(), message: warnings.join("; ") }
    };
    Ok(Outcome { payload: Value::Object(payload), certificates, table: None, status })
}

fn dispatch(cfg: &RunConfig, cache: &MomentCache) -> Result<Outcome> {
    cfg.weight().validate()?;
    match cfg.command.as_str() {
        "moments" => cmd_moments(cfg, cache),
        "hankel" => cmd_hankel(cfg, cache),
        "recurrence" => cmd_recurrence(cfg, cache),
        "identities" => cmd_identities(cfg),
        "p3-verify" => cmd_p3_verify(cfg),
        "equilibrium" => cmd_equilibrium(cfg),
        "phi-map" => cmd_phi_map(cfg),
        "p1-solve" => cmd_p1_solve(cfg),
        "ds-extract" => cmd_ds_extract(cfg, cache),
        "consistency" => cmd_consistency(cfg, cache),
        "report-all" => cmd_report_all(cfg, cache),
        other => Err(Error::Usage(format!("unknown command {other}"))),
    }
}

/// Runs one configuration and returns the envelope plus the CSV mirror.
pub fn execute(cfg: &RunConfig, cache: &MomentCache) -> (ReportEnvelope, Option<CsvTable>) {
    let start = Instant::now();
    let (payload, certificates, table, status) = match cfg.validate().and_then(|_| dispatch(cfg, cache)) {
        Ok(o) => (o.payload, o.certificates, o.table, o.status),
        Err(e) => (Value::Null, vec![], None, Status::Error { code: e.code().into(), message: e.to_string() }),
    };
    let env = ReportEnvelope {
        tool: "hp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        timing_seconds: cfg.timing.then(|| start.elapsed().as_secs_f64()),
        certificates,
        payload,
        status,
    };
    (env, table)
}

fn write_outputs(env: &ReportEnvelope, table: Option<&CsvTable>) -> Result<()> {
    let text = serde_json::to_string_pretty(env).map_err(|e| Error::Io(e.to_string()))? + "\n";
    match (&env.config.out, env.config.format) {
        (None, Format::Json) => print!("{text}"),
        (None, Format::Csv) => match table {
            Some(t) => t.write(std::io::stdout())?,
            None => print!("{text}"),
        },
        (Some(path), Format::Json) => std::fs::write(path, text)?,
        (Some(path), Format::Csv) => {
            if let Some(t) = table {
                t.write(std::fs::File::create(path)?)?;
            }
            let mut env_path = path.clone().into_os_string();
            env_path.push(".json");
            std::fs::write(env_path, text)?;
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    let cfg = v.get("config").cloned().unwrap_or(v);
    serde_json::from_value(cfg).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

/// Entry point of the `hp` binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match (cli.config, cli.cmd) {
        (Some(path), None) => match load_config(&path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("hp: {e}");
                return EXIT_USAGE;
            }
        },
        (None, Some(cmd)) => RunConfig::from_cmd(cmd),
        _ => {
            eprintln!("hp: give either a subcommand or --config");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = cfg.validate() {
        eprintln!("hp: {e}");
        return EXIT_USAGE;
    }
    let cache = MomentCache::from_env();
    let (env, table) = execute(&cfg, &cache);
    if let Err(e) = write_outputs(&env, table.as_ref()) {
        eprintln!("hp: {e}");
        return EXIT_ERROR;
    }
    if let Status::Error { code, message } = &env.status {
        eprintln!("hp: {code}: {message}");
    }
    env.status.exit_code()
}
