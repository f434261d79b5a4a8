//! Stationarity and identity checks: Burke gates for Busemann functions and
//! boundary passage times, the TASEP bridge, mass-field stationarity, and
//! the pathwise non-crossing tally.

use serde::{Deserialize, Serialize};

use super::{run_replicates, Gate, SampleSet};
use crate::busemann::{busemann_down, pathwise_duality_event, PathwiseConfig};
use crate::coalescence::CoalescenceConfig;
use crate::env::SeededField;
use crate::error::{domain, Error, Result};
use crate::lattice::Point;
use crate::lpp::{evolve_mass, exit_row, MassField};
use crate::stats::{dkw_radius, dkw_radius_two_sample, exp_cdf, EmpiricalDistribution, DKW_ALPHA};
use crate::tasep::{interchange_times, TasepState};

/// One row of a check report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub statistic: f64,
    pub threshold: String,
    pub samples: u64,
    pub pass: bool,
}

impl From<&Gate> for CheckRow {
    fn from(g: &Gate) -> Self {
        CheckRow { check: g.name.clone(), statistic: g.value, threshold: g.rule.clone(), samples: 0, pass: g.pass }
    }
}

fn row(gate: &Gate, samples: usize) -> CheckRow {
    CheckRow { samples: samples as u64, ..CheckRow::from(gate) }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurkeConfig {
    pub seed: u64,
    /// Busemann replicates per sign.
    pub samples: u64,
    pub n0: i64,
    pub cap: i64,
    /// Row height and width for the horizontal increments of `Lbar`.
    pub row_height: i64,
    pub row_width: i64,
    pub row_replicates: u64,
    /// Corner `(n, n)` and replicates for the mean of `Lbar(n, n) / 4n`.
    pub corner_n: i64,
    pub corner_replicates: u64,
}

impl Default for BurkeConfig {
    fn default() -> Self {
        BurkeConfig {
            seed: 0,
            samples: 10_000,
            n0: 64,
            cap: 1024,
            row_height: 64,
            row_width: 1000,
            row_replicates: 10,
            corner_n: 500,
            corner_replicates: 2000,
        }
    }
}

impl BurkeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 100 || self.row_replicates == 0 || self.corner_replicates == 0 {
            return domain("every Burke sample needs replicates (at least 100 Busemann values)");
        }
        if self.n0 < 2 || self.cap < self.n0 {
            return domain("need 2 <= n0 <= cap");
        }
        if self.row_height < 1 || self.row_width < 1 || self.corner_n < 1 {
            return domain("row height, row width and corner must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurkeReport {
    /// `B_down(0, e1)`.
    pub forward: SampleSet,
    /// `-B_down(0, -e1)`, from independent environments.
    pub reflected: SampleSet,
    /// Busemann values read before their coalescence point stabilized.
    pub unstabilized: u64,
    pub increments: EmpiricalDistribution,
    /// Mean of `Lbar(n, n) / 4n`.
    pub corner_mean: f64,
    pub gates: Vec<Gate>,
    pub rows: Vec<CheckRow>,
}

/// Burke property of `B_down` and of the boundary model.
pub fn burke_check(cfg: &BurkeConfig, workers: usize) -> Result<BurkeReport> {
    cfg.validate()?;
    let coal = CoalescenceConfig { n0: cfg.n0, cap: cfg.cap };
    let sample = |id: &str, z: Point, sign: f64| -> Result<(Vec<f64>, u64)> {
        let out = run_replicates(id, cfg.seed, 0..cfg.samples, workers, |_, s| {
            let b = busemann_down(&SeededField::interior(s), Point::ORIGIN, z, coal)?;
            Ok((sign * b.value, b.stabilized))
        })?;
        let unstable = out.iter().filter(|(_, ok)| !ok).count() as u64;
        Ok((out.into_iter().map(|(v, _)| v).collect(), unstable))
    };
    let (fwd, u1) = sample("burke/forward", Point::new(1, 0), 1.0)?;
    let (rev, u2) = sample("burke/reflected", Point::new(-1, 0), -1.0)?;
    let forward = SampleSet::new("burke/forward", fwd, 0)?;
    let reflected = SampleSet::new("burke/reflected", rev, 0)?;

    let (h, w) = (cfg.row_height, cfg.row_width);
    let rows_out = run_replicates("burke/increments", cfg.seed, 0..cfg.row_replicates, workers, |_, s| {
        let (times, _) = exit_row(&SeededField::boundary(s), w, h)?;
        Ok(times.windows(2).map(|p| p[1] - p[0]).collect::<Vec<f64>>())
    })?;
    let increments = EmpiricalDistribution::new(rows_out.concat())?;

    let n = cfg.corner_n;
    let corners = run_replicates("burke/corner", cfg.seed, 0..cfg.corner_replicates, workers, |_, s| {
        let (times, _) = exit_row(&SeededField::boundary(s), n, n)?;
        Ok(times[n as usize] / (4 * n) as f64)
    })?;
    let corner_mean = corners.iter().sum::<f64>() / corners.len() as f64;

    let exp_half = exp_cdf(0.5);
    let (f, r) = (&forward.values, &reflected.values);
    let gates = vec![
        Gate::at_most("burke_busemann_ks", f.ks_distance(&exp_half), f.dkw()),
        Gate::at_most(
            "burke_reflection_ks",
            f.ks_two_sample(r),
            dkw_radius_two_sample(f.len(), r.len(), DKW_ALPHA),
        ),
        Gate::at_most("burke_increments_ks", increments.ks_distance(&exp_half), increments.dkw()),
        Gate::within("burke_corner_mean", corner_mean, 0.99, 1.01),
    ];
    let sizes = [f.len(), f.len() + r.len(), increments.len(), corners.len()];
    let rows = gates.iter().zip(sizes).map(|(g, s)| row(g, s)).collect();
    Ok(BurkeReport { forward, reflected, unstabilized: u1 + u2, increments, corner_mean, gates, rows })
}

/// How the time origin of a TASEP replicate is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rooting {
    /// Exact Palm sampling; the past comes from the reversed process.
    #[default]
    Palm,
    /// First jump across `(0, 1)` after the burn-in.
    FirstJump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TasepConfig {
    pub seed: u64,
    pub rooting: Rooting,
    pub half_width: i64,
    /// Valid replicates to collect.
    pub samples: u64,
    /// Used by [`Rooting::FirstJump`] only.
    pub burn_in: f64,
    /// Time allowed for the interchanges (and the reference jump), in both
    /// time directions.
    pub horizon: f64,
    pub label_max: i64,
    /// Replicates for the density check at time `half_width / 4`.
    pub density_replicates: u64,
}

impl Default for TasepConfig {
    fn default() -> Self {
        TasepConfig {
            seed: 0,
            rooting: Rooting::Palm,
            half_width: 256,
            samples: 5000,
            burn_in: 32.0,
            horizon: 64.0,
            label_max: 1,
            density_replicates: 20,
        }
    }
}

impl TasepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.half_width < 64 {
            return domain(format!("half-width must be at least 64, got {}", self.half_width));
        }
        if self.samples < 100 || self.density_replicates == 0 {
            return domain("need at least 100 valid replicates and one density replicate");
        }
        if !(self.burn_in >= 0.0 && self.horizon > 0.0) {
            return domain("burn-in must be nonnegative and the horizon positive");
        }
        if self.label_max < 1 {
            return domain("label_max must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TasepRow {
    pub replicate: u64,
    pub i: i64,
    pub j: i64,
    #[serde(rename = "G_value")]
    pub g_value: Option<f64>,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TasepReport {
    pub rows: Vec<TasepRow>,
    /// Replicates simulated to collect the valid ones.
    pub attempted: u64,
    pub valid: u64,
    pub densities: Vec<f64>,
    pub gates: Vec<Gate>,
    pub summary: Vec<CheckRow>,
}

/// Interchange table of one replicate; `None` if the reference jump never came.
fn tasep_replicate(cfg: &TasepConfig, seed: u64) -> Result<Option<crate::tasep::InterchangeTable>> {
    let mut s = match cfg.rooting {
        Rooting::Palm => TasepState::init_palm(cfg.half_width, seed, cfg.horizon)?,
        Rooting::FirstJump => {
            let mut s = TasepState::init_stationary(cfg.half_width, seed)?;
            match s.run_until_reference_jump(cfg.burn_in, cfg.horizon) {
                Ok(()) => {}
                Err(Error::Resource(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
            s
        }
    };
    Ok(Some(interchange_times(&mut s, cfg.label_max, cfg.label_max, cfg.horizon)?))
}

/// Observed values of `G(i, j)` over valid tables.
fn column(tables: &[(u64, crate::tasep::InterchangeTable)], i: i64, j: i64, sign: f64) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(tables.iter().filter_map(|(_, t)| t.get(i, j)).map(|g| sign * g).collect())
}

/// The TASEP bridge: `G(0, 0) = 0`, `G(1, 1)` against `Lbar(1, 1)`,
/// `-G(-z)` against `G(z)`, and density preservation.
pub fn tasep_check(cfg: &TasepConfig, workers: usize) -> Result<TasepReport> {
    cfg.validate()?;
    let id = format!("tasep/K={}", cfg.half_width);
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    let mut next = 0u64;
    while (tables.len() as u64) < cfg.samples {
        let need = cfg.samples - tables.len() as u64;
        let batch = need + need / 8 + 16;
        let out = run_replicates(&id, cfg.seed, next..next + batch, workers, |_, s| tasep_replicate(cfg, s))?;
        for (k, t) in (next..next + batch).zip(out) {
            let Some(t) = t else { continue };
            if (tables.len() as u64) < cfg.samples {
                for i in -t.i_max..=t.i_max {
                    for j in -t.j_max..=t.j_max {
                        rows.push(TasepRow { replicate: k, i, j, g_value: t.get(i, j), valid: t.valid });
                    }
                }
                if t.valid {
                    tables.push((k, t));
                }
            }
        }
        next += batch;
        if next > 20 * cfg.samples {
            return Err(Error::Resource(format!("fewer than {} valid TASEP replicates in {next} tries", cfg.samples)));
        }
    }
    let attempted = rows.iter().map(|r| r.replicate).max().map_or(0, |k| k + 1);

    let g00_ok = tables.iter().all(|(_, t)| t.get(0, 0) == Some(0.0));
    let g11 = column(&tables, 1, 1, 1.0)?;
    let lbar_id = format!("tasep/lbar/K={}", cfg.half_width);
    let lbar = EmpiricalDistribution::new(run_replicates(&lbar_id, cfg.seed, 0..cfg.samples, workers, |_, s| {
        Ok(exit_row(&SeededField::boundary(s), 1, 1)?.0[1])
    })?)?;
    let mut gates = vec![
        Gate::new("tasep_g00", g00_ok, 0.0, "G(0,0) = 0 on every valid replicate"),
        Gate::at_most("tasep_g11_vs_lbar_ks", g11.ks_two_sample(&lbar), 0.05),
    ];
    let mut sizes = vec![tables.len(), g11.len() + lbar.len()];
    for (i, j) in [(0, 1), (1, 0), (1, 1)] {
        let fwd = column(&tables, i, j, 1.0)?;
        let rev = column(&tables, -i, -j, -1.0)?;
        let d = if fwd.is_empty() || rev.is_empty() { f64::INFINITY } else { fwd.ks_two_sample(&rev) };
        gates.push(Gate::at_most(&format!("tasep_reverse_ks[{i},{j}]"), d, 0.05));
        sizes.push(fwd.len() + rev.len());
    }

    let k = cfg.half_width;
    let t_end = k as f64 / 4.0;
    let densities = run_replicates(&format!("{id}/density"), cfg.seed, 0..cfg.density_replicates, workers, |_, s| {
        let mut st = TasepState::init_stationary(k, s)?;
        st.run_until(t_end);
        Ok(st.density(-k / 2, k / 2))
    })?;
    let band = 5.0 * 0.5 / ((k + 1) as f64).sqrt();
    let worst = densities.iter().map(|d| (d - 0.5).abs()).fold(0.0, f64::max);
    gates.push(Gate::at_most("tasep_density_deviation", worst, band));
    sizes.push(densities.len());

    let summary = gates.iter().zip(sizes).map(|(g, s)| row(g, s)).collect();
    Ok(TasepReport { rows, attempted, valid: tables.len() as u64, densities, gates, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassConfig {
    pub seed: u64,
    pub rho: f64,
    pub steps: usize,
    pub replicates: u64,
    /// Sites per replicate, the window `(0, sites]`.
    pub sites: i64,
    /// First site of the initial field.
    pub initial_start: i64,
}

impl Default for MassConfig {
    fn default() -> Self {
        MassConfig { seed: 0, rho: 0.5, steps: 32, replicates: 10, sites: 1000, initial_start: -8192 }
    }
}

impl MassConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return domain(format!("density parameter must lie in (0,1), got {}", self.rho));
        }
        if self.replicates == 0 || self.sites < 1 {
            return domain("need at least one replicate and one site");
        }
        if self.initial_start >= 0 {
            return domain("the initial field must start left of the window");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub replicate: u64,
    pub site: i64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub rows: Vec<MassRow>,
    pub ks: f64,
    pub max_retries: u32,
    pub gates: Vec<Gate>,
    pub summary: Vec<CheckRow>,
}

/// i.i.d. Exp(`rho`) masses evolved for `steps` steps stay i.i.d. Exp(`rho`).
pub fn massfield_check(cfg: &MassConfig, workers: usize) -> Result<MassReport> {
    cfg.validate()?;
    let len = (cfg.sites - cfg.initial_start + 1) as usize;
    let out = run_replicates("massfield", cfg.seed, 0..cfg.replicates, workers, |_, s| {
        let initial = MassField::iid_exp(cfg.initial_start, len, cfg.rho, s)?;
        evolve_mass(&initial, cfg.steps, (0, cfg.sites), s)
    })?;
    let mut rows = Vec::new();
    for (k, ev) in out.iter().enumerate() {
        for (i, &w) in ev.field.masses.iter().enumerate() {
            rows.push(MassRow { replicate: k as u64, site: ev.field.start + i as i64, mass: w });
        }
    }
    let values = EmpiricalDistribution::new(rows.iter().map(|r| r.mass).collect())?;
    let ks = values.ks_distance(exp_cdf(cfg.rho));
    let gates = vec![Gate::at_most("massfield_ks", ks, dkw_radius(values.len(), DKW_ALPHA))];
    let summary = vec![row(&gates[0], values.len())];
    let max_retries = out.iter().map(|e| e.retries).max().unwrap_or(0);
    Ok(MassReport { rows, ks, max_retries, gates, summary })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCheckConfig {
    pub seed: u64,
    pub m: i64,
    pub n: i64,
    pub replicates: u64,
    pub width: i64,
    pub n0: i64,
    pub cap: i64,
}

impl Default for TreeCheckConfig {
    fn default() -> Self {
        TreeCheckConfig { seed: 0, m: 8, n: 64, replicates: 200, width: 256, n0: 256, cap: 4096 }
    }
}

impl TreeCheckConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.m && self.m < self.n) {
            return domain(format!("the identity holds for n > m >= 1, got m={}, n={}", self.m, self.n));
        }
        if self.replicates == 0 || self.width < 1 || self.n0 < 1 || self.cap < self.n0 {
            return domain("need replicates, a positive width and 1 <= n0 <= cap");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCheckRow {
    pub replicate: u64,
    pub lhs: bool,
    pub rhs: bool,
    pub stabilized: bool,
    pub width: i64,
    pub n_used: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCheckReport {
    pub rows: Vec<TreeCheckRow>,
    pub stabilized: u64,
    pub agreements: u64,
    pub failure_rate: f64,
    pub gates: Vec<Gate>,
    pub summary: Vec<CheckRow>,
}

/// Tally of `{T*_m < n} = {no crossing in [-m, m]}` over replicates.
pub fn tree_check(cfg: &TreeCheckConfig, workers: usize) -> Result<TreeCheckReport> {
    cfg.validate()?;
    let pc = PathwiseConfig { width: cfg.width, n0: cfg.n0, cap: cfg.cap };
    let id = format!("treecheck/m={}/n={}", cfg.m, cfg.n);
    let rows = run_replicates(&id, cfg.seed, 0..cfg.replicates, workers, |k, s| {
        let r = pathwise_duality_event(&SeededField::interior(s), cfg.m, cfg.n, pc)?;
        Ok(TreeCheckRow { replicate: k, lhs: r.lhs, rhs: r.rhs, stabilized: r.stabilized, width: r.width, n_used: r.n_used })
    })?;
    let stabilized = rows.iter().filter(|r| r.stabilized).count() as u64;
    let agreements = rows.iter().filter(|r| r.stabilized && r.lhs == r.rhs).count() as u64;
    let failure_rate = 1.0 - stabilized as f64 / rows.len() as f64;
    let gates = vec![
        Gate::new(
            "treecheck_agreement",
            stabilized > 0 && agreements == stabilized,
            if stabilized == 0 { 0.0 } else { agreements as f64 / stabilized as f64 },
            "= 1 over stabilized replicates",
        ),
        Gate::at_most("treecheck_failure_rate", failure_rate, 0.05),
    ];
    let summary = vec![row(&gates[0], stabilized as usize), row(&gates[1], rows.len())];
    Ok(TreeCheckReport { rows, stabilized, agreements, failure_rate, gates, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burke_small_run() {
        let cfg = BurkeConfig {
            seed: 1,
            samples: 400,
            row_width: 200,
            row_replicates: 2,
            corner_n: 50,
            corner_replicates: 50,
            ..BurkeConfig::default()
        };
        let rep = burke_check(&cfg, 2).unwrap();
        assert_eq!(rep.gates.len(), 4);
        assert!(rep.gates[..3].iter().all(|g| g.pass), "{:?}", rep.gates);
        assert_eq!(rep.increments.len(), 400);
        assert!(burke_check(&BurkeConfig { samples: 10, ..cfg }, 1).is_err());
    }

    #[test]
    fn tasep_small_run() {
        let cfg = TasepConfig { seed: 2, rooting: Rooting::Palm, half_width: 64, samples: 100, burn_in: 8.0, horizon: 32.0, label_max: 1, density_replicates: 3 };
        let rep = tasep_check(&cfg, 2).unwrap();
        assert_eq!(rep.valid, 100);
        assert!(rep.gates[0].pass);
        assert!(rep.rows.iter().filter(|r| r.i == 0 && r.j == 0).all(|r| r.g_value == Some(0.0)));
        assert!(rep.gates.last().unwrap().pass);
    }

    #[test]
    fn massfield_small_run() {
        let cfg = MassConfig { seed: 3, steps: 8, replicates: 2, sites: 300, initial_start: -2048, ..MassConfig::default() };
        let rep = massfield_check(&cfg, 1).unwrap();
        assert_eq!(rep.rows.len(), 600);
        assert!(rep.gates[0].pass, "{:?}", rep.gates);
        assert!(massfield_check(&MassConfig { rho: 1.5, ..cfg }, 1).is_err());
    }

    #[test]
    fn tree_check_small_run() {
        let cfg = TreeCheckConfig { seed: 4, m: 2, n: 8, replicates: 20, width: 32, n0: 32, cap: 1024 };
        let rep = tree_check(&cfg, 2).unwrap();
        assert_eq!(rep.agreements, rep.stabilized);
        assert!(rep.gates[0].pass);
        assert!(tree_check(&TreeCheckConfig { n: 2, ..cfg }, 1).is_err());
    }
}
