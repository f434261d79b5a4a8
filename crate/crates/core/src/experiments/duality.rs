//! `P(T_m < n)` against `P(no exit point in [-m, m] at height n)`.
//!
//! The two sides are estimated from independent environments with
//! different laws: interior fields for the coalescence time, boundary fields
//! for the exit points.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{run_replicates, Gate};
use crate::coalescence::{coalescence_event, Censored, CoalescenceConfig, CoalescenceMethod};
use crate::env::SeededField;
use crate::error::{domain, Error, Result};
use crate::lattice::Point;
use crate::lpp::exit_interval_count;
use crate::stats::{proportion, z_score};

/// Exclusions above this fraction flag an estimate.
pub const MAX_EXCLUDED: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityConfig {
    pub m: i64,
    pub n: i64,
    /// Replicates per side.
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub method: CoalescenceMethod,
    /// Initial and largest target scale of the finite-target method.
    pub n0: i64,
    pub cap: i64,
    /// Largest window width for the exit-point scan.
    pub width_cap: i64,
}

impl DualityConfig {
    /// Defaults: the stationary method, `n0 = 16 m`, `cap = 256 m`, exit
    /// windows up to `64 (n + m)`.
    pub fn new(m: i64, n: i64, samples: u64, seed: u64) -> Self {
        DualityConfig {
            m,
            n,
            samples,
            seed,
            method: CoalescenceMethod::default(),
            n0: 16 * m,
            cap: 256 * m,
            width_cap: 64 * (n + m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.m && self.m < self.n) {
            return domain(format!("the formula holds for n > m >= 1, got m={}, n={}", self.m, self.n));
        }
        if self.samples < 100 {
            return domain(format!("need at least 100 samples per side, got {}", self.samples));
        }
        if self.n0 <= self.m || self.cap < self.n0 {
            return domain("need m < n0 <= cap");
        }
        Ok(())
    }
}

/// Counters of both sides; merges by addition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityTally {
    pub m: i64,
    pub n: i64,
    pub lhs_hits: u64,
    pub lhs_valid: u64,
    pub lhs_excluded: u64,
    pub rhs_hits: u64,
    pub rhs_valid: u64,
    pub rhs_excluded: u64,
}

impl DualityTally {
    pub fn merge(&self, other: &DualityTally) -> Result<DualityTally> {
        let empty = |t: &DualityTally| t.lhs_valid + t.lhs_excluded + t.rhs_valid + t.rhs_excluded == 0;
        let (m, n) = if empty(self) {
            (other.m, other.n)
        } else if empty(other) || (self.m, self.n) == (other.m, other.n) {
            (self.m, self.n)
        } else {
            return domain(format!(
                "descriptor mismatch: (m, n) = ({}, {}) vs ({}, {})",
                self.m, self.n, other.m, other.n
            ));
        };
        Ok(DualityTally {
            m,
            n,
            lhs_hits: self.lhs_hits + other.lhs_hits,
            lhs_valid: self.lhs_valid + other.lhs_valid,
            lhs_excluded: self.lhs_excluded + other.lhs_excluded,
            rhs_hits: self.rhs_hits + other.rhs_hits,
            rhs_valid: self.rhs_valid + other.rhs_valid,
            rhs_excluded: self.rhs_excluded + other.rhs_excluded,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityEstimate {
    pub m: i64,
    pub n: i64,
    pub samples_lhs: u64,
    pub samples_rhs: u64,
    pub p_lhs: f64,
    pub se_lhs: f64,
    pub p_rhs: f64,
    pub se_rhs: f64,
    pub z: f64,
    pub excluded_lhs: u64,
    pub excluded_rhs: u64,
    /// More than 1% of either side was excluded.
    pub flagged: bool,
}

impl DualityEstimate {
    pub fn from_tally(t: &DualityTally) -> Result<Self> {
        if t.lhs_valid == 0 || t.rhs_valid == 0 {
            return domain("no valid replicates on one side");
        }
        let (p_lhs, se_lhs) = proportion(t.lhs_hits as usize, t.lhs_valid as usize);
        let (p_rhs, se_rhs) = proportion(t.rhs_hits as usize, t.rhs_valid as usize);
        let frac = |e: u64, v: u64| e as f64 / (e + v) as f64;
        Ok(DualityEstimate {
            m: t.m,
            n: t.n,
            samples_lhs: t.lhs_valid,
            samples_rhs: t.rhs_valid,
            p_lhs,
            se_lhs,
            p_rhs,
            se_rhs,
            z: z_score(p_lhs, se_lhs, p_rhs, se_rhs),
            excluded_lhs: t.lhs_excluded,
            excluded_rhs: t.rhs_excluded,
            flagged: frac(t.lhs_excluded, t.lhs_valid) > MAX_EXCLUDED
                || frac(t.rhs_excluded, t.rhs_valid) > MAX_EXCLUDED,
        })
    }

    pub fn gates(&self) -> Vec<Gate> {
        let tag = format!("m={},n={}", self.m, self.n);
        vec![
            Gate::at_most(&format!("duality_z[{tag}]"), self.z, 3.0),
            Gate::new(
                &format!("duality_exclusions[{tag}]"),
                !self.flagged,
                (self.excluded_lhs + self.excluded_rhs) as f64,
                format!("excluded fraction per side <= {MAX_EXCLUDED}"),
            ),
        ]
    }
}

/// `Some(T_m < n)`, or `None` when the method could not settle it.
pub fn coalescence_indicator(seed: u64, cfg: &DualityConfig) -> Result<Option<bool>> {
    let field = SeededField::interior(seed);
    let coal = CoalescenceConfig { n0: cfg.n0, cap: cfg.cap };
    let rec = coalescence_event(&field, Point::new(cfg.m, 0), Point::new(0, cfg.m), cfg.n, cfg.method, coal)?;
    Ok(rec.stabilized.then_some(matches!(rec.outcome, Censored::Exact(_))))
}

/// `Some(no exit point in [-m, m])`, or `None` when the scan hit its cap.
pub fn exit_indicator(seed: u64, cfg: &DualityConfig) -> Result<Option<bool>> {
    let field = SeededField::boundary(seed);
    match exit_interval_count(&field, cfg.n, cfg.m, cfg.width_cap) {
        Ok(scan) => Ok(Some(scan.count() == 0)),
        Err(Error::Resource(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn experiment_ids(cfg: &DualityConfig) -> (String, String) {
    (format!("duality/lhs/m={}/n={}", cfg.m, cfg.n), format!("duality/rhs/m={}/n={}", cfg.m, cfg.n))
}

/// Tallies replicates `range` of both sides.
pub fn duality_tally(cfg: &DualityConfig, range: Range<u64>, workers: usize) -> Result<DualityTally> {
    cfg.validate()?;
    let (lhs_id, rhs_id) = experiment_ids(cfg);
    let lhs = run_replicates(&lhs_id, cfg.seed, range.clone(), workers, |_, s| coalescence_indicator(s, cfg))?;
    let rhs = run_replicates(&rhs_id, cfg.seed, range, workers, |_, s| exit_indicator(s, cfg))?;
    let count = |v: &[Option<bool>]| {
        let valid = v.iter().flatten().count() as u64;
        let hits = v.iter().flatten().filter(|&&b| b).count() as u64;
        (hits, valid, v.len() as u64 - valid)
    };
    let (lhs_hits, lhs_valid, lhs_excluded) = count(&lhs);
    let (rhs_hits, rhs_valid, rhs_excluded) = count(&rhs);
    Ok(DualityTally { m: cfg.m, n: cfg.n, lhs_hits, lhs_valid, lhs_excluded, rhs_hits, rhs_valid, rhs_excluded })
}

/// Both proportions with standard errors and their z-score.
pub fn estimate_duality(cfg: &DualityConfig, workers: usize) -> Result<DualityEstimate> {
    DualityEstimate::from_tally(&duality_tally(cfg, 0..cfg.samples, workers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_configs() {
        assert!(DualityConfig::new(8, 8, 1000, 1).validate().is_err());
        assert!(DualityConfig::new(8, 64, 0, 1).validate().is_err());
        assert!(DualityConfig::new(8, 64, 99, 1).validate().is_err());
        assert!(DualityConfig::new(8, 64, 100, 1).validate().is_ok());
        assert!(estimate_duality(&DualityConfig::new(3, 2, 500, 1), 1).is_err());
    }

    #[test]
    fn split_runs_merge_to_the_full_run() {
        let cfg = DualityConfig::new(2, 8, 200, 17);
        let full = duality_tally(&cfg, 0..200, 1).unwrap();
        let a = duality_tally(&cfg, 0..120, 1).unwrap();
        let b = duality_tally(&cfg, 120..200, 2).unwrap();
        assert_eq!(a.merge(&b).unwrap(), full);
        assert_eq!(b.merge(&a).unwrap(), full);
        assert_eq!(full.merge(&DualityTally::default()).unwrap(), full);
        let other = duality_tally(&DualityConfig::new(3, 8, 100, 17), 0..100, 1).unwrap();
        assert!(full.merge(&other).is_err());
    }

    #[test]
    fn small_case_is_consistent() {
        let est = estimate_duality(&DualityConfig::new(2, 8, 2000, 5), 1).unwrap();
        assert!(est.z <= 4.0, "{est:?}");
        assert!(!est.flagged);
    }
}
