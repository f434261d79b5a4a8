//! Command-line front end for the last-passage percolation experiments.
//!
//! Every experiment resolves its configuration from defaults, an optional
//! JSON file and flags (flags win), runs, and writes its CSV tables plus
//! `config.json` and `manifest.json` into `<out>/<command>-<hash>`.
//!
//! Exit status: 0 when every gate passes, 1 when some gate fails (a
//! `failures.json` is written), 2 on usage errors (nothing is written), 3 when
//! the run itself errors out (nothing is written).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lpp_core::experiments::checks::{
    burke_check, massfield_check, tasep_check, tree_check, BurkeConfig, MassConfig, Rooting, TasepConfig,
    TreeCheckConfig,
};
use lpp_core::coalescence::CoalescenceMethod;
use lpp_core::experiments::duality::{estimate_duality, DualityConfig};
use lpp_core::experiments::output::{to_csv, DualityRow};
use lpp_core::experiments::scaling::{
    check_lowtail, estimate_f, estimate_g, lowtail_gates, rescaled_profiles, FConfig, GConfig, ScalarRow,
};
use lpp_core::experiments::{run_replicates, Gate};
use lpp_core::Error;

/// Environment variable holding the default output root.
pub const OUT_ENV: &str = "LPP_DUALITY_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lpp-duality", version, about = "Monte Carlo checks for exponential last-passage percolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(flatten)]
    Run(Experiment),
    /// Checks a configuration without running it.
    Validate {
        #[command(subcommand)]
        experiment: Experiment,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum Experiment {
    /// P(T_m < n) against P(no exit point in [-m, m] at height n).
    Duality(Params),
    /// Survival function of the rescaled coalescence time.
    Gcurve(Params),
    /// Distribution function of the rescaled exit point.
    Fcdf(Params),
    /// Low-tail bound G(r) >= F(r^-2/3) - F(-r^-2/3).
    Lowtail(Params),
    /// Rescaled profiles A_n, B_n and the scalars C_n, U_n.
    Profiles(Params),
    /// Pathwise non-crossing tally on the dual tree.
    TreeCheck(Params),
    /// Burke property of Busemann functions and of the boundary model.
    Burke(Params),
    /// Interchange times of stationary TASEP.
    Tasep(Params),
    /// Stationarity of i.i.d. exponential masses.
    Massfield(Params),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Duality(_) => "duality",
            Experiment::Gcurve(_) => "gcurve",
            Experiment::Fcdf(_) => "fcdf",
            Experiment::Lowtail(_) => "lowtail",
            Experiment::Profiles(_) => "profiles",
            Experiment::TreeCheck(_) => "tree-check",
            Experiment::Burke(_) => "burke",
            Experiment::Tasep(_) => "tasep",
            Experiment::Massfield(_) => "massfield",
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Experiment::Duality(p)
            | Experiment::Gcurve(p)
            | Experiment::Fcdf(p)
            | Experiment::Lowtail(p)
            | Experiment::Profiles(p)
            | Experiment::TreeCheck(p)
            | Experiment::Burke(p)
            | Experiment::Tasep(p)
            | Experiment::Massfield(p) => p,
        }
    }
}

/// Flags shared by every experiment; each experiment uses a subset.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    #[arg(long)]
    pub m: Option<i64>,
    #[arg(long)]
    pub n: Option<i64>,
    /// Replicates (per side for duality).
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub r_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub s_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u_grid: Option<Vec<f64>>,
    /// Initial window width of the tree check.
    #[arg(long)]
    pub width: Option<i64>,
    /// Largest window width of the exit-point scan.
    #[arg(long)]
    pub window_cap: Option<i64>,
    /// Initial far-target scale.
    #[arg(long)]
    pub n0: Option<i64>,
    /// Largest far-target scale.
    #[arg(long)]
    pub cap: Option<i64>,
    /// Coalescence sampler: `stationary` (exact) or `finite-target`
    /// (geodesics to a far corner, uses --n0 and --cap).
    #[arg(long)]
    pub coalescence: Option<String>,
    /// TASEP segment half-width.
    #[arg(long)]
    pub half_width: Option<i64>,
    /// TASEP time origin: `palm` (exact) or `first-jump` (after a burn-in).
    #[arg(long)]
    pub rooting: Option<String>,
    /// Worker threads; never affects the results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output root; defaults to $LPP_DUALITY_OUT, then `runs`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the parameters above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Params {
    /// Field-wise `over` if set, else `self`.
    pub fn overlay(self, over: Params) -> Params {
        Params {
            m: over.m.or(self.m),
            n: over.n.or(self.n),
            samples: over.samples.or(self.samples),
            seed: over.seed.or(self.seed),
            r_grid: over.r_grid.or(self.r_grid),
            s_grid: over.s_grid.or(self.s_grid),
            u_grid: over.u_grid.or(self.u_grid),
            width: over.width.or(self.width),
            window_cap: over.window_cap.or(self.window_cap),
            n0: over.n0.or(self.n0),
            cap: over.cap.or(self.cap),
            coalescence: over.coalescence.or(self.coalescence),
            half_width: over.half_width.or(self.half_width),
            rooting: over.rooting.or(self.rooting),
            workers: over.workers.or(self.workers),
            out: over.out.or(self.out),
            config: over.config.or(self.config),
        }
    }

    /// Names of the experiment parameters that are set.
    fn set_keys(&self) -> Vec<&'static str> {
        let flags = [
            ("m", self.m.is_some()),
            ("n", self.n.is_some()),
            ("samples", self.samples.is_some()),
            ("seed", self.seed.is_some()),
            ("r-grid", self.r_grid.is_some()),
            ("s-grid", self.s_grid.is_some()),
            ("u-grid", self.u_grid.is_some()),
            ("width", self.width.is_some()),
            ("window-cap", self.window_cap.is_some()),
            ("n0", self.n0.is_some()),
            ("cap", self.cap.is_some()),
            ("coalescence", self.coalescence.is_some()),
            ("half-width", self.half_width.is_some()),
            ("rooting", self.rooting.is_some()),
        ];
        flags.into_iter().filter(|f| f.1).map(|f| f.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowtailConfig {
    pub m: i64,
    pub n: i64,
    pub samples: u64,
    pub seed: u64,
    pub r_grid: Vec<f64>,
    #[serde(default)]
    pub method: CoalescenceMethod,
    pub n0: i64,
    pub cap: i64,
}

impl LowtailConfig {
    fn g(&self) -> GConfig {
        GConfig {
            m: self.m,
            samples: self.samples,
            seed: self.seed,
            r_grid: self.r_grid.clone(),
            method: self.method,
            n0: self.n0,
            cap: self.cap,
        }
    }

    fn f(&self) -> FConfig {
        FConfig { n: self.n, samples: self.samples, seed: self.seed, s_grid: vec![0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilesConfig {
    pub n: i64,
    pub samples: u64,
    pub seed: u64,
    pub u_grid: Vec<f64>,
}

/// Band for the mean of `C_n`.
pub const C_MEAN_BAND: (f64, f64) = (-1.0, 0.2);

/// A fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Resolved {
    Duality(DualityConfig),
    Gcurve(GConfig),
    Fcdf(FConfig),
    Lowtail(LowtailConfig),
    Profiles(ProfilesConfig),
    TreeCheck(TreeCheckConfig),
    Burke(BurkeConfig),
    Tasep(TasepConfig),
    Massfield(MassConfig),
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as i64;
    (0..=k).map(|i| lo + i as f64 * step).collect()
}

/// Resolves `p` for experiment `name`, or lists every violation.
pub fn resolve(name: &str, p: &Params) -> Result<Resolved, Vec<String>> {
    let allowed: &[&str] = match name {
        "duality" => &["m", "n", "samples", "seed", "coalescence", "n0", "cap", "window-cap"],
        "gcurve" => &["m", "samples", "seed", "r-grid", "coalescence", "n0", "cap"],
        "fcdf" => &["n", "samples", "seed", "s-grid"],
        "lowtail" => &["m", "n", "samples", "seed", "r-grid", "coalescence", "n0", "cap"],
        "profiles" => &["n", "samples", "seed", "u-grid"],
        "tree-check" => &["m", "n", "samples", "seed", "width", "n0", "cap"],
        "burke" => &["n", "samples", "seed", "n0", "cap"],
        "tasep" => &["samples", "seed", "half-width", "rooting"],
        "massfield" => &["n", "samples", "seed"],
        _ => return Err(vec![format!("unknown command {name:?}")]),
    };
    let mut errs: Vec<String> = p
        .set_keys()
        .into_iter()
        .filter(|k| !allowed.contains(k))
        .map(|k| format!("--{k} is not a parameter of {name}"))
        .collect();
    let method = match p.coalescence.as_deref() {
        None | Some("stationary") => CoalescenceMethod::Stationary,
        Some("finite-target") => CoalescenceMethod::FiniteTarget,
        Some(other) => {
            errs.push(format!("--coalescence must be stationary or finite-target, got {other:?}"));
            CoalescenceMethod::Stationary
        }
    };
    let mut required = |key: &str, v: Option<i64>| -> i64 {
        v.unwrap_or_else(|| {
            errs.push(format!("missing required parameter --{key}"));
            0
        })
    };
    let seed = p.seed.unwrap_or(0);
    let resolved = match name {
        "duality" => {
            let (m, n) = (required("m", p.m), required("n", p.n));
            let mut c = DualityConfig::new(m, n, p.samples.unwrap_or(20_000), seed);
            c.method = method;
            c.n0 = p.n0.unwrap_or(c.n0);
            c.cap = p.cap.unwrap_or(c.cap);
            c.width_cap = p.window_cap.unwrap_or(c.width_cap);
            Resolved::Duality(c)
        }
        "gcurve" => {
            let m = required("m", p.m);
            let r = p.r_grid.clone().unwrap_or_else(|| vec![0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0]);
            let mut c = GConfig::new(m, p.samples.unwrap_or(5000), seed, r);
            c.method = method;
            c.n0 = p.n0.unwrap_or(c.n0);
            c.cap = p.cap.unwrap_or(c.cap);
            Resolved::Gcurve(c)
        }
        "fcdf" => Resolved::Fcdf(FConfig {
            n: required("n", p.n),
            samples: p.samples.unwrap_or(10_000),
            seed,
            s_grid: p.s_grid.clone().unwrap_or_else(|| grid(-2.0, 2.0, 0.25)),
        }),
        "lowtail" => {
            let m = p.m.unwrap_or(128);
            let g = GConfig::new(m, 0, 0, vec![]);
            Resolved::Lowtail(LowtailConfig {
                m,
                n: p.n.unwrap_or(256),
                samples: p.samples.unwrap_or(5000),
                seed,
                r_grid: p.r_grid.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]),
                method,
                n0: p.n0.unwrap_or(g.n0),
                cap: p.cap.unwrap_or(g.cap),
            })
        }
        "profiles" => Resolved::Profiles(ProfilesConfig {
            n: p.n.unwrap_or(256),
            samples: p.samples.unwrap_or(2000),
            seed,
            u_grid: p.u_grid.clone().unwrap_or_else(|| grid(-1.0, 1.0, 0.125)),
        }),
        "tree-check" => {
            let d = TreeCheckConfig::default();
            Resolved::TreeCheck(TreeCheckConfig {
                seed,
                m: p.m.unwrap_or(d.m),
                n: p.n.unwrap_or(d.n),
                replicates: p.samples.unwrap_or(d.replicates),
                width: p.width.unwrap_or(d.width),
                n0: p.n0.unwrap_or(d.n0),
                cap: p.cap.unwrap_or(d.cap),
            })
        }
        "burke" => {
            let d = BurkeConfig::default();
            Resolved::Burke(BurkeConfig {
                seed,
                samples: p.samples.unwrap_or(d.samples),
                n0: p.n0.unwrap_or(d.n0),
                cap: p.cap.unwrap_or(d.cap),
                corner_n: p.n.unwrap_or(d.corner_n),
                ..d
            })
        }
        "tasep" => {
            let d = TasepConfig::default();
            let k = p.half_width.unwrap_or(d.half_width);
            let rooting = match p.rooting.as_deref() {
                None | Some("palm") => Rooting::Palm,
                Some("first-jump") => Rooting::FirstJump,
                Some(other) => {
                    errs.push(format!("--rooting must be palm or first-jump, got {other:?}"));
                    Rooting::Palm
                }
            };
            Resolved::Tasep(TasepConfig {
                seed,
                rooting,
                half_width: k,
                samples: p.samples.unwrap_or(d.samples),
                burn_in: k as f64 / 8.0,
                horizon: k as f64 / 4.0,
                ..d
            })
        }
        _ => {
            let d = MassConfig::default();
            Resolved::Massfield(MassConfig {
                seed,
                steps: p.n.map_or(Ok(d.steps), usize::try_from).unwrap_or(0),
                replicates: p.samples.unwrap_or(d.replicates),
                ..d
            })
        }
    };
    if let Err(e) = resolved.validate() {
        errs.push(e.to_string());
    }
    if errs.is_empty() {
        Ok(resolved)
    } else {
        Err(errs)
    }
}

impl Resolved {
    pub fn name(&self) -> &'static str {
        match self {
            Resolved::Duality(_) => "duality",
            Resolved::Gcurve(_) => "gcurve",
            Resolved::Fcdf(_) => "fcdf",
            Resolved::Lowtail(_) => "lowtail",
            Resolved::Profiles(_) => "profiles",
            Resolved::TreeCheck(_) => "tree-check",
            Resolved::Burke(_) => "burke",
            Resolved::Tasep(_) => "tasep",
            Resolved::Massfield(_) => "massfield",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Resolved::Duality(c) => c.seed,
            Resolved::Gcurve(c) => c.seed,
            Resolved::Fcdf(c) => c.seed,
            Resolved::Lowtail(c) => c.seed,
            Resolved::Profiles(c) => c.seed,
            Resolved::TreeCheck(c) => c.seed,
            Resolved::Burke(c) => c.seed,
            Resolved::Tasep(c) => c.seed,
            Resolved::Massfield(c) => c.seed,
        }
    }

    pub fn validate(&self) -> lpp_core::Result<()> {
        match self {
            Resolved::Duality(c) => c.validate(),
            Resolved::Gcurve(c) => c.validate(),
            Resolved::Fcdf(c) => c.validate(),
            Resolved::Lowtail(c) => {
                c.g().validate()?;
                c.f().validate()?;
                if c.r_grid.iter().any(|&r| r <= 0.0) {
                    return Err(Error::Domain("low-tail radii must be positive".into()));
                }
                Ok(())
            }
            Resolved::Profiles(c) => {
                if c.n < 1 || c.samples == 0 {
                    return Err(Error::Domain("profiles need n >= 1 and at least one sample".into()));
                }
                let umax = c.n as f64 / lpp_core::experiments::scaling::exit_scale(c.n);
                if c.u_grid.is_empty() || c.u_grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Domain("u grid must be nonempty and strictly increasing".into()));
                }
                if c.u_grid.iter().any(|u| u.abs() > umax) {
                    return Err(Error::Domain(format!("|u| must not exceed 2^(-5/3) n^(1/3) = {umax}")));
                }
                Ok(())
            }
            Resolved::TreeCheck(c) => c.validate(),
            Resolved::Burke(c) => c.validate(),
            Resolved::Tasep(c) => c.validate(),
            Resolved::Massfield(c) => c.validate(),
        }
    }

    /// Canonical JSON of the configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configurations serialize")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Tables and gates produced by one run.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(file name, CSV text)`.
    pub tables: Vec<(String, String)>,
    pub gates: Vec<Gate>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

fn table<T: Serialize>(name: &str, rows: &[T]) -> lpp_core::Result<(String, String)> {
    Ok((name.to_string(), to_csv(rows)?))
}

/// Strictly decreasing along the points of `keys` present in the rows.
fn g_gates(g: &lpp_core::experiments::scaling::GCurve) -> Vec<Gate> {
    let mut gates = vec![
        Gate::new("gcurve_t_at_least_m", g.below_m == 0, g.below_m as f64, "no sample with T_m < m"),
        Gate::at_most("gcurve_excluded_fraction", g.samples.excluded_fraction(), 0.01),
    ];
    let keys: Vec<(f64, f64)> = [0.2, 1.0, 4.0]
        .iter()
        .filter_map(|&r| g.rows.iter().find(|row| row.r == r).map(|row| (r, row.g_hat)))
        .collect();
    if keys.len() >= 2 {
        let ok = keys.windows(2).all(|w| w[0].1 > w[1].1);
        let gap = keys.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::INFINITY, f64::min);
        gates.push(Gate::new("gcurve_strictly_decreasing", ok, gap, "G_hat(0.2) > G_hat(1) > G_hat(4)"));
    }
    if let Some(&(_, g02)) = keys.iter().find(|k| k.0 == 0.2) {
        gates.push(Gate::new("gcurve_g_at_0.2", g02 >= 0.8, g02, ">= 0.8"));
    }
    gates
}

/// Runs a resolved experiment; nothing is written.
pub fn execute(cfg: &Resolved, workers: usize) -> lpp_core::Result<Outcome> {
    let mut out = Outcome::default();
    match cfg {
        Resolved::Duality(c) => {
            let est = estimate_duality(c, workers)?;
            out.tables.push(table("duality.csv", &[DualityRow::from(&est)])?);
            out.gates = est.gates();
        }
        Resolved::Gcurve(c) => {
            let g = estimate_g(c, workers)?;
            out.tables.push(table("gcurve.csv", &g.rows)?);
            out.gates = g_gates(&g);
        }
        Resolved::Fcdf(c) => {
            let f = estimate_f(c, workers)?;
            out.tables.push(table("fcdf.csv", &f.rows)?);
            let v = &f.samples.values;
            out.gates = vec![
                Gate::at_most("fcdf_lower_tail", v.ecdf(-10.0), v.dkw()),
                Gate::at_most("fcdf_upper_tail", 1.0 - v.ecdf(10.0), v.dkw()),
                Gate::at_most("fcdf_median", v.median().abs(), 0.1),
            ];
        }
        Resolved::Lowtail(c) => {
            let g = estimate_g(&c.g(), workers)?;
            let f = estimate_f(&c.f(), workers)?;
            let rows = check_lowtail(&g, &f, &c.r_grid)?;
            out.tables.push(table("lowtail.csv", &rows)?);
            out.gates = lowtail_gates(&rows);
        }
        Resolved::Profiles(c) => {
            let id = format!("profiles/n={}", c.n);
            let samples = run_replicates(&id, c.seed, 0..c.samples, workers, |_, s| rescaled_profiles(c.n, &c.u_grid, s))?;
            let profiles: Vec<_> = samples.iter().flat_map(|s| s.profile_rows()).collect();
            let scalars: Vec<ScalarRow> =
                samples.iter().map(|s| ScalarRow { n: s.n, c_n: s.c_value, u_n: s.u_n }).collect();
            let dominated = samples.iter().all(|s| {
                (0..s.u_grid.len()).all(|i| s.c_value >= s.b_values[i] + s.a_values[i] - s.u_grid[i].powi(2) - 1e-9)
            });
            let consistent = samples.iter().filter(|s| s.variational_consistent).count();
            let checked = samples.iter().filter(|s| s.max_matches.is_some()).count();
            let matched = samples.iter().filter(|s| s.max_matches == Some(true)).count();
            let mean_c = scalars.iter().map(|r| r.c_n).sum::<f64>() / scalars.len() as f64;
            out.tables.push(table("profiles.csv", &profiles)?);
            out.tables.push(table("scalars.csv", &scalars)?);
            out.gates = vec![
                Gate::new("profiles_dominance", dominated, 0.0, "C_n >= B_n + A_n - u^2 on the grid"),
                Gate::new(
                    "profiles_variational",
                    consistent == samples.len(),
                    consistent as f64,
                    "variational max and argmax reproduce Lbar(n,n) and Z(n,n)",
                ),
                Gate::new(
                    "profiles_grid_max",
                    matched == checked,
                    checked as f64,
                    "grid max equals C_n whenever the grid holds the argmax",
                ),
                Gate::within("profiles_mean_c", mean_c, C_MEAN_BAND.0, C_MEAN_BAND.1),
            ];
        }
        Resolved::TreeCheck(c) => {
            let r = tree_check(c, workers)?;
            out.tables.push(table("treecheck.csv", &r.rows)?);
            out.gates = r.gates;
        }
        Resolved::Burke(c) => {
            let r = burke_check(c, workers)?;
            out.tables.push(table("burke.csv", &r.rows)?);
            out.gates = r.gates;
        }
        Resolved::Tasep(c) => {
            let r = tasep_check(c, workers)?;
            out.tables.push(table("tasep.csv", &r.rows)?);
            out.tables.push(table("tasep_gates.csv", &r.summary)?);
            out.gates = r.gates;
        }
        Resolved::Massfield(c) => {
            let r = massfield_check(c, workers)?;
            out.tables.push(table("massfield.csv", &r.rows)?);
            out.gates = r.gates;
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    master_seed: u64,
    config_hash: String,
    tool_version: &'a str,
    generator_version: &'a str,
    wall_time_seconds: f64,
    files: Vec<&'a str>,
    gates: &'a [Gate],
}

/// First free directory `<root>/<name>-<hash12>[-k]`.
fn fresh_dir(root: &Path, name: &str, hash: &str) -> PathBuf {
    let base = root.join(format!("{name}-{}", &hash[..12]));
    if !base.exists() {
        return base;
    }
    (1..).map(|k| root.join(format!("{name}-{}-{k}", &hash[..12]))).find(|p| !p.exists()).expect("unbounded")
}

/// Writes the outcome of a run; returns the run directory.
pub fn persist(root: &Path, cfg: &Resolved, outcome: &Outcome, wall: f64) -> lpp_core::Result<PathBuf> {
    let hash = cfg.hash();
    let dir = fresh_dir(root, cfg.name(), &hash);
    fs::create_dir_all(&dir)?;
    for (name, text) in &outcome.tables {
        fs::write(dir.join(name), text)?;
    }
    fs::write(dir.join("config.json"), cfg.to_json())?;
    let manifest = Manifest {
        command: cfg.name(),
        master_seed: cfg.seed(),
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION"),
        generator_version: lpp_core::env::GENERATOR_VERSION,
        wall_time_seconds: wall,
        files: outcome.tables.iter().map(|t| t.0.as_str()).collect(),
        gates: &outcome.gates,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    if !outcome.passed() {
        let failed: Vec<&Gate> = outcome.gates.iter().filter(|g| !g.pass).collect();
        fs::write(dir.join("failures.json"), serde_json::to_string_pretty(&failed)?)?;
    }
    Ok(dir)
}

/// Flags over the JSON file named by `--config`.
pub fn merged_params(flags: &Params) -> Result<Params, String> {
    let base = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<Params>(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?
        }
        None => Params::default(),
    };
    Ok(base.overlay(flags.clone()))
}

fn usage(errs: &[String]) -> i32 {
    for e in errs {
        eprintln!("error: {e}");
    }
    EXIT_USAGE
}

/// Parses `args` and runs; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (experiment, dry) = match &cli.command {
        Command::Run(e) => (e, false),
        Command::Validate { experiment } => (experiment, true),
    };
    let params = match merged_params(experiment.params()) {
        Ok(p) => p,
        Err(e) => return usage(&[e]),
    };
    let cfg = match resolve(experiment.name(), &params) {
        Ok(c) => c,
        Err(errs) => return usage(&errs),
    };
    if dry {
        println!("{} configuration is valid", cfg.name());
        println!("{}", cfg.to_json());
        return EXIT_OK;
    }
    let workers = params.workers.unwrap_or(1);
    let start = Instant::now();
    let outcome = match execute(&cfg, workers) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let root = params
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let dir = match persist(&root, &cfg, &outcome, start.elapsed().as_secs_f64()) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    for g in &outcome.gates {
        println!("{} {} = {} ({})", if g.pass { "PASS" } else { "FAIL" }, g.name, g.value, g.rule);
    }
    println!("wrote {}", dir.display());
    if outcome.passed() {
        EXIT_OK
    } else {
        EXIT_GATE_FAILED
    }
}
