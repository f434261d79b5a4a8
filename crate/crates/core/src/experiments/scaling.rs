//! Rescaled coalescence times, rescaled exit points, the low-tail bound,
//! and the rescaled profiles of the variational formula.

use serde::{Deserialize, Serialize};

use super::{run_replicates, Gate, SampleSet};
use crate::coalescence::{coalescence_event, Censored, CoalescenceConfig, CoalescenceMethod};
use crate::env::{SeededField, WeightSource};
use crate::error::{domain, Result};
use crate::lattice::Point;
use crate::lpp::{exit_row, BackwardSweep, Keep};
use crate::stats::EmpiricalDistribution;

/// `2^{-5/2} m^{3/2}`, the scale of `T_m`.
pub fn coalescence_scale(m: i64) -> f64 {
    2f64.powf(-2.5) * (m as f64).powf(1.5)
}

/// `2^{5/3} n^{2/3}`, the scale of `Z(n, n)`.
pub fn exit_scale(n: i64) -> f64 {
    2f64.powf(5.0 / 3.0) * (n as f64).powf(2.0 / 3.0)
}

/// `2^{4/3} n^{1/3}`, the fluctuation scale of `Lbar(n, n)`.
pub fn fluctuation_scale(n: i64) -> f64 {
    2f64.powf(4.0 / 3.0) * (n as f64).powf(1.0 / 3.0)
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return domain(format!("{name} grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain(format!("{name} grid must be finite and strictly increasing"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GConfig {
    pub m: i64,
    pub samples: u64,
    pub seed: u64,
    pub r_grid: Vec<f64>,
    #[serde(default)]
    pub method: CoalescenceMethod,
    /// Initial and largest target scale of the finite-target method.
    pub n0: i64,
    pub cap: i64,
}

impl GConfig {
    pub fn new(m: i64, samples: u64, seed: u64, r_grid: Vec<f64>) -> Self {
        let c = CoalescenceConfig::for_m(m);
        GConfig { m, samples, seed, r_grid, method: CoalescenceMethod::default(), n0: c.n0, cap: c.cap }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 16 {
            return domain(format!("the rescaled curve needs m >= 16, got {}", self.m));
        }
        if self.samples == 0 {
            return domain("need at least one sample");
        }
        check_grid("r", &self.r_grid)?;
        if self.r_grid[0] < 0.0 {
            return domain("r must be nonnegative");
        }
        Ok(())
    }

    /// Rows at or above this level are never resolved.
    pub fn level(&self) -> i64 {
        let r = self.r_grid.last().copied().unwrap_or(0.0);
        ((r * coalescence_scale(self.m)).floor() as i64 + 1).max(self.m + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRow {
    pub r: f64,
    pub m: i64,
    #[serde(rename = "S")]
    pub s: u64,
    #[serde(rename = "G_hat")]
    pub g_hat: f64,
    pub dkw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GCurve {
    pub m: i64,
    /// `T_m / scale`, `+inf` where `T_m` lies beyond the resolved level.
    pub samples: SampleSet,
    /// Largest rescaled value known exactly.
    pub resolved_to: f64,
    pub rows: Vec<GRow>,
    /// Samples with `T_m < m` or `c_1 < m`; must be zero.
    pub below_m: u64,
}

impl GCurve {
    /// Survival `P(T_m / scale > r)`, for `r` within the resolved range.
    pub fn g_hat(&self, r: f64) -> Result<f64> {
        if r >= self.resolved_to {
            return domain(format!("r={r} is beyond the resolved range {}", self.resolved_to));
        }
        Ok(self.samples.values.survival(r))
    }

    /// Samples with every value above `r` replaced by `+inf`.
    pub fn censored_at(&self, r: f64) -> Result<EmpiricalDistribution> {
        if r >= self.resolved_to {
            return domain(format!("r={r} is beyond the resolved range {}", self.resolved_to));
        }
        let v = self.samples.values.samples().iter().map(|&x| if x > r { f64::INFINITY } else { x }).collect();
        EmpiricalDistribution::new(v)
    }
}

/// Rescaled `T_m` of one interior field, resolved below `level`;
/// `None` if the method could not settle it.
pub fn rescaled_coalescence(
    seed: u64,
    m: i64,
    level: i64,
    method: CoalescenceMethod,
    cfg: CoalescenceConfig,
) -> Result<Option<(f64, bool)>> {
    let field = SeededField::interior(seed);
    let rec = coalescence_event(&field, Point::new(m, 0), Point::new(0, m), level, method, cfg)?;
    if !rec.stabilized {
        return Ok(None);
    }
    Ok(Some(match rec.outcome {
        Censored::Exact(c) => (c.y as f64 / coalescence_scale(m), c.y >= m && c.x >= m),
        Censored::AtLeast(_) => (f64::INFINITY, true),
    }))
}

/// `G_hat(r)`: survival function of `T_m / (2^{-5/2} m^{3/2})`.
pub fn estimate_g(cfg: &GConfig, workers: usize) -> Result<GCurve> {
    cfg.validate()?;
    let level = cfg.level();
    let coal = CoalescenceConfig { n0: cfg.n0, cap: cfg.cap };
    let id = format!("gcurve/m={}", cfg.m);
    let out = run_replicates(&id, cfg.seed, 0..cfg.samples, workers, |_, s| rescaled_coalescence(s, cfg.m, level, cfg.method, coal))?;
    let excluded = out.iter().filter(|o| o.is_none()).count() as u64;
    let below_m = out.iter().flatten().filter(|(_, ok)| !ok).count() as u64;
    let samples = SampleSet::new(id, out.iter().flatten().map(|(v, _)| *v).collect(), excluded)?;
    let s = samples.values.len() as u64;
    let dkw = samples.values.dkw();
    let rows = cfg
        .r_grid
        .iter()
        .map(|&r| GRow { r, m: cfg.m, s, g_hat: samples.values.survival(r), dkw })
        .collect();
    Ok(GCurve { m: cfg.m, samples, resolved_to: level as f64 / coalescence_scale(cfg.m), rows, below_m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FConfig {
    pub n: i64,
    pub samples: u64,
    pub seed: u64,
    pub s_grid: Vec<f64>,
}

impl FConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 64 {
            return domain(format!("the rescaled exit law needs n >= 64, got {}", self.n));
        }
        if self.samples == 0 {
            return domain("need at least one sample");
        }
        check_grid("s", &self.s_grid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FRow {
    pub s: f64,
    pub n: i64,
    #[serde(rename = "S")]
    pub samples: u64,
    #[serde(rename = "F_hat")]
    pub f_hat: f64,
    pub dkw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FCurve {
    pub n: i64,
    /// `U_n = Z(n, n) / (2^{5/3} n^{2/3})`.
    pub samples: SampleSet,
    pub rows: Vec<FRow>,
}

/// `(Lbar(n, n), Z(n, n))` of one boundary field.
pub fn corner_sample(seed: u64, n: i64) -> Result<(f64, i64)> {
    let (times, labels) = exit_row(&SeededField::boundary(seed), n, n)?;
    Ok((times[n as usize], labels[n as usize]))
}

/// ECDF of `U_n` at the grid points.
pub fn estimate_f(cfg: &FConfig, workers: usize) -> Result<FCurve> {
    cfg.validate()?;
    let id = format!("fcdf/n={}", cfg.n);
    let scale = exit_scale(cfg.n);
    let out = run_replicates(&id, cfg.seed, 0..cfg.samples, workers, |_, s| {
        Ok(corner_sample(s, cfg.n)?.1 as f64 / scale)
    })?;
    let samples = SampleSet::new(id, out, 0)?;
    let (n_s, dkw) = (samples.values.len() as u64, samples.values.dkw());
    let rows = cfg
        .s_grid
        .iter()
        .map(|&s| FRow { s, n: cfg.n, samples: n_s, f_hat: samples.values.ecdf(s), dkw })
        .collect();
    Ok(FCurve { n: cfg.n, samples, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowtailRow {
    pub r: f64,
    /// `G_hat(r) + eps_G + 2 eps_F`.
    pub lhs: f64,
    /// `F_hat(r^{-2/3}) - F_hat(-r^{-2/3})`.
    pub rhs: f64,
    pub pass: bool,
}

/// The bound `G(r) >= F(r^{-2/3}) - F(-r^{-2/3})` with DKW slack.
pub fn check_lowtail(g: &GCurve, f: &FCurve, r_grid: &[f64]) -> Result<Vec<LowtailRow>> {
    check_grid("r", r_grid)?;
    let (eg, ef) = (g.samples.values.dkw(), f.samples.values.dkw());
    r_grid
        .iter()
        .map(|&r| {
            if r <= 0.0 {
                return domain("low-tail radii must be positive");
            }
            let s = r.powf(-2.0 / 3.0);
            let lhs = g.g_hat(r)? + eg + 2.0 * ef;
            let rhs = f.samples.values.ecdf(s) - f.samples.values.ecdf(-s);
            Ok(LowtailRow { r, lhs, rhs, pass: lhs >= rhs })
        })
        .collect()
}

pub fn lowtail_gates(rows: &[LowtailRow]) -> Vec<Gate> {
    rows.iter()
        .map(|row| Gate::new(&format!("lowtail[r={}]", row.r), row.pass, row.lhs - row.rhs, ">= 0"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledSample {
    pub n: i64,
    /// Grid points snapped to the lattice: `u = z / (2^{5/3} n^{2/3})`.
    pub u_grid: Vec<f64>,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// `(Lbar(n, n) - 4n) / (2^{4/3} n^{1/3})`.
    pub c_value: f64,
    /// `max_u {B_n(u) + A_n(u) - u^2}` over the grid.
    pub grid_max: f64,
    pub u_n: f64,
    /// The full variational maximum reproduces `Lbar(n, n)` and its argmax
    /// reproduces `Z(n, n)`.
    pub variational_consistent: bool,
    /// Whether the grid contains the argmax; the exact-max check runs only then.
    pub argmax_in_grid: bool,
    pub max_matches: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: i64,
    pub u: f64,
    #[serde(rename = "A_n")]
    pub a_n: f64,
    #[serde(rename = "B_n")]
    pub b_n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRow {
    pub n: i64,
    #[serde(rename = "C_n")]
    pub c_n: f64,
    #[serde(rename = "U_n")]
    pub u_n: f64,
}

impl RescaledSample {
    pub fn profile_rows(&self) -> Vec<ProfileRow> {
        (0..self.u_grid.len())
            .map(|i| ProfileRow { n: self.n, u: self.u_grid[i], a_n: self.a_values[i], b_n: self.b_values[i] })
            .collect()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Rescaled boundary walk `B_n` and interior profile `A_n` of one boundary
/// field, plus `C_n` and `U_n`.
///
/// For `u < 0` both centerings use `|z|`, making `B_n` a centered walk on
/// either side; `B_n + A_n` is the same under either convention.
pub fn rescaled_profiles(n: i64, u_grid: &[f64], seed: u64) -> Result<RescaledSample> {
    if n < 1 {
        return domain("n must be positive");
    }
    check_grid("u", u_grid)?;
    let (zs, fs) = (exit_scale(n), fluctuation_scale(n));
    let umax = n as f64 / zs;
    if u_grid.iter().any(|u| u.abs() > umax) {
        return domain(format!("|u| must not exceed 2^(-5/3) n^(1/3) = {umax}"));
    }
    let field = SeededField::boundary(seed);
    let sweep = BackwardSweep::run(&field, Point::new(1, 1), Point::new(n, n), Keep::All)?;
    let entry = |z: i64| match z {
        z if z > 0 => Point::new(z, 1),
        z if z < 0 => Point::new(1, -z),
        _ => Point::new(1, 1),
    };
    let l_z = |z: i64| {
        let e = entry(z);
        field.weight_at(e) + sweep.time(e).expect("entry is inside the sweep")
    };
    let mut horiz = vec![0.0; n as usize + 1];
    field.fill_row(0, 0, &mut horiz);
    let mut mass = vec![0.0; 2 * n as usize + 1];
    for k in 1..=n as usize {
        mass[n as usize + k] = mass[n as usize + k - 1] + horiz[k];
        mass[n as usize - k] = mass[n as usize - k + 1] + field.weight_at(Point::new(0, k as i64));
    }
    let m_z = |z: i64| mass[(z + n) as usize];

    let (lbar, z_exit) = corner_sample(seed, n)?;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for z in -n..=n {
        let v = m_z(z) + l_z(z);
        if v > best {
            (best, arg) = (v, z);
        }
    }
    let variational_consistent = close(best, lbar) && arg == z_exit;

    let mut u_eff = Vec::with_capacity(u_grid.len());
    let (mut a_values, mut b_values) = (Vec::new(), Vec::new());
    let mut grid_max = f64::NEG_INFINITY;
    let mut grid_z = Vec::new();
    for &u in u_grid {
        let z = (u * zs).round() as i64;
        let u = z as f64 / zs;
        let a = (l_z(z) - (4 * n - 2 * z.abs()) as f64) / fs + u * u;
        let b = (m_z(z) - 2.0 * z.abs() as f64) / fs;
        grid_max = grid_max.max(b + a - u * u);
        u_eff.push(u);
        a_values.push(a);
        b_values.push(b);
        grid_z.push(z);
    }
    let c_value = (lbar - 4.0 * n as f64) / fs;
    let argmax_in_grid = grid_z.contains(&z_exit);
    Ok(RescaledSample {
        n,
        u_grid: u_eff,
        a_values,
        b_values,
        c_value,
        grid_max,
        u_n: z_exit as f64 / zs,
        variational_consistent,
        argmax_in_grid,
        max_matches: argmax_in_grid.then(|| close(grid_max, c_value)),
    })
}

/// `(C_n, U_n)` for replicates `0..samples`.
pub fn scalar_samples(n: i64, samples: u64, seed: u64, workers: usize) -> Result<Vec<ScalarRow>> {
    let (zs, fs) = (exit_scale(n), fluctuation_scale(n));
    run_replicates(&format!("scalars/n={n}"), seed, 0..samples, workers, |_, s| {
        let (lbar, z) = corner_sample(s, n)?;
        Ok(ScalarRow { n, c_n: (lbar - 4.0 * n as f64) / fs, u_n: z as f64 / zs })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_match_closed_forms() {
        assert!((coalescence_scale(128) - 256.0).abs() < 1e-9);
        assert!((exit_scale(8) - 2f64.powf(5.0 / 3.0) * 4.0).abs() < 1e-12);
        assert!((fluctuation_scale(8) - 2f64.powf(4.0 / 3.0) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn g_curve_is_a_survival_function() {
        let cfg = GConfig::new(16, 200, 3, vec![0.0, 0.2, 1.0, 4.0]);
        let g = estimate_g(&cfg, 1).unwrap();
        assert_eq!(g.rows[0].g_hat, 1.0);
        assert!(g.rows.windows(2).all(|w| w[0].g_hat >= w[1].g_hat));
        assert_eq!(g.below_m, 0);
        assert!(g.g_hat(5.0).is_err());
        assert!(GConfig::new(8, 10, 1, vec![1.0]).validate().is_err());
        assert!(GConfig::new(16, 10, 1, vec![]).validate().is_err());
        assert!(GConfig::new(16, 10, 1, vec![2.0, 1.0]).validate().is_err());
    }

    #[test]
    fn f_curve_tightness() {
        let cfg = FConfig { n: 64, samples: 300, seed: 4, s_grid: vec![-10.0, 0.0, 10.0] };
        let f = estimate_f(&cfg, 1).unwrap();
        assert!(f.rows[0].f_hat <= f.rows[0].dkw);
        assert!(f.rows[2].f_hat >= 1.0 - f.rows[2].dkw);
        assert!(estimate_f(&FConfig { n: 32, ..cfg }, 1).is_err());
    }

    #[test]
    fn profiles_reproduce_the_corner_time() {
        let n = 40;
        let zs = exit_scale(n);
        // Every lattice point is on the grid, so the argmax is too.
        let grid: Vec<f64> = (-n..=n).map(|z| z as f64 / zs).collect();
        for seed in 0..5 {
            let r = rescaled_profiles(n, &grid, seed).unwrap();
            assert!(r.variational_consistent);
            assert!(r.argmax_in_grid);
            assert_eq!(r.max_matches, Some(true));
            for i in 0..grid.len() {
                let u = r.u_grid[i];
                assert!(r.c_value >= r.b_values[i] + r.a_values[i] - u * u - 1e-9);
            }
        }
        let coarse = rescaled_profiles(n, &[-0.5, 0.5], 1).unwrap();
        assert_eq!(coarse.max_matches.is_some(), coarse.argmax_in_grid);
        assert!(rescaled_profiles(n, &[0.0, 10.0], 1).is_err());
    }

    #[test]
    fn lowtail_rows() {
        let g = estimate_g(&GConfig::new(16, 100, 8, vec![0.5, 1.0, 4.0]), 1).unwrap();
        let f = estimate_f(&FConfig { n: 64, samples: 100, seed: 8, s_grid: vec![0.0] }, 1).unwrap();
        let rows = check_lowtail(&g, &f, &[1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(check_lowtail(&g, &f, &[8.0]).is_err());
        assert!(rows.iter().all(|r| r.pass == (r.lhs >= r.rhs)));
    }
}
