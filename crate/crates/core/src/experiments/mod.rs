//! Monte Carlo experiments and their statistical gates.
//!
//! Replicate `k` of experiment `id` draws its environment from
//! `replicate_seed(master_seed, id, k)`, so results depend only on the
//! replicate range and never on how replicates are scheduled.

pub mod checks;
pub mod duality;
pub mod output;
pub mod scaling;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::replicate_seed;
use crate::stats::EmpiricalDistribution;

/// Evaluates `f(k, seed_k)` for every `k` in `range` on `workers` threads.
/// The output is ordered by `k`.
pub fn run_replicates<T, F>(id: &str, master_seed: u64, range: Range<u64>, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        range
            .into_par_iter()
            .map(|k| f(k, replicate_seed(master_seed, id, k)))
            .collect()
    })
}

/// Outcome of one statistical check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    /// Observed statistic.
    pub value: f64,
    /// Human-readable acceptance rule.
    pub rule: String,
}

impl Gate {
    pub fn new(name: &str, pass: bool, value: f64, rule: impl Into<String>) -> Self {
        Gate { name: name.to_string(), pass, value, rule: rule.into() }
    }

    /// `value <= bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        let rule = if bound != 0.0 && bound.abs() < 1e-3 { format!("<= {bound:e}") } else { format!("<= {bound:.6}") };
        Gate::new(name, value <= bound, value, rule)
    }

    /// `lo <= value <= hi`.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Gate::new(name, (lo..=hi).contains(&value), value, format!("in [{lo}, {hi}]"))
    }
}

/// Samples of one quantity plus the replicates that produced none.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub descriptor: String,
    pub values: EmpiricalDistribution,
    pub excluded: u64,
}

impl SampleSet {
    pub fn new(descriptor: impl Into<String>, values: Vec<f64>, excluded: u64) -> Result<Self> {
        Ok(SampleSet { descriptor: descriptor.into(), values: EmpiricalDistribution::new(values)?, excluded })
    }

    /// Associative, commutative union; the descriptors must agree (an empty
    /// descriptor acts as the identity).
    pub fn merge(&self, other: &SampleSet) -> Result<SampleSet> {
        let descriptor = match (self.descriptor.as_str(), other.descriptor.as_str()) {
            ("", d) | (d, "") => d.to_string(),
            (a, b) if a == b => a.to_string(),
            (a, b) => return domain(format!("descriptor mismatch: {a:?} vs {b:?}")),
        };
        Ok(SampleSet {
            descriptor,
            values: self.values.merge(&other.values),
            excluded: self.excluded + other.excluded,
        })
    }

    /// Fraction of replicates excluded.
    pub fn excluded_fraction(&self) -> f64 {
        let total = self.values.len() as u64 + self.excluded;
        if total == 0 {
            0.0
        } else {
            self.excluded as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_order_is_independent_of_workers() {
        let f = |k: u64, s: u64| Ok(s.wrapping_add(k));
        let a = run_replicates("t", 9, 0..50, 1, f).unwrap();
        let b = run_replicates("t", 9, 0..50, 4, f).unwrap();
        assert_eq!(a, b);
        let mut c = run_replicates("t", 9, 0..20, 2, f).unwrap();
        c.extend(run_replicates("t", 9, 20..50, 3, f).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn sample_set_merge_laws() {
        let a = SampleSet::new("x", vec![1.0, 3.0], 1).unwrap();
        let b = SampleSet::new("x", vec![2.0], 0).unwrap();
        let e = SampleSet::default();
        assert_eq!(a.merge(&e).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
        let c = SampleSet::new("x", vec![0.5], 2).unwrap();
        assert_eq!(a.merge(&b).unwrap().merge(&c).unwrap(), a.merge(&b.merge(&c).unwrap()).unwrap());
        assert!(a.merge(&SampleSet::new("y", vec![], 0).unwrap()).is_err());
        assert_eq!(a.excluded_fraction(), 1.0 / 3.0);
    }
}
