//! Empirical distributions, Kolmogorov-Smirnov distances and DKW bands.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Significance level of every DKW band used by the checks.
pub const DKW_ALPHA: f64 = 0.01;

/// Radius `sqrt(ln(2/alpha) / (2n))` of the DKW confidence band.
pub fn dkw_radius(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Two-sample analogue: `sqrt(ln(2/alpha) / 2 * (n1 + n2) / (n1 n2))`.
pub fn dkw_radius_two_sample(n1: usize, n2: usize, alpha: f64) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    ((2.0 / alpha).ln() / 2.0 * (a + b) / (a * b)).sqrt()
}

/// Sorted sample with ECDF evaluation. Samples may be `+inf` (censored
/// observations known only to exceed every finite threshold used).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| x.is_nan()) {
            return domain("samples must not be NaN");
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `#{x_i <= x} / n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// `#{x_i > x} / n`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.ecdf(x)
    }

    pub fn dkw(&self) -> f64 {
        dkw_radius(self.len(), DKW_ALPHA)
    }

    /// Lower empirical quantile.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// `sup_x |F_n(x) - F(x)|` against a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.samples.iter().enumerate() {
            let f = cdf(x);
            d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
        }
        d
    }

    /// `sup_x |F_n(x) - G_m(x)|` between two samples.
    pub fn ks_two_sample(&self, other: &EmpiricalDistribution) -> f64 {
        let (a, b) = (&self.samples, &other.samples);
        let (n, m) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
            while i < a.len() && a[i] == x {
                i += 1;
            }
            while j < b.len() && b[j] == x {
                j += 1;
            }
            d = d.max((i as f64 / n - j as f64 / m).abs());
        }
        d
    }

    /// Multiset union.
    pub fn merge(&self, other: &EmpiricalDistribution) -> EmpiricalDistribution {
        let mut samples = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.samples, &other.samples);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i].total_cmp(&b[j]).is_le() {
                samples.push(a[i]);
                i += 1;
            } else {
                samples.push(b[j]);
                j += 1;
            }
        }
        samples.extend_from_slice(&a[i..]);
        samples.extend_from_slice(&b[j..]);
        EmpiricalDistribution { samples }
    }
}

/// CDF of the exponential law with the given rate.
pub fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() }
}

/// Proportion with its binomial standard error.
pub fn proportion(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// `|p1 - p2| / sqrt(se1^2 + se2^2)`; zero when both errors vanish and the
/// proportions agree.
pub fn z_score(p1: f64, se1: f64, p2: f64, se2: f64) -> f64 {
    let s = (se1 * se1 + se2 * se2).sqrt();
    if s == 0.0 {
        if p1 == p2 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p1 - p2).abs() / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ed(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_is_right_continuous() {
        let e = ed(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.ecdf(0.9), 0.0);
        assert_eq!(e.ecdf(1.0), 0.25);
        assert_eq!(e.ecdf(2.0), 0.75);
        assert_eq!(e.survival(2.0), 0.25);
        assert_eq!(e.ecdf(f64::INFINITY), 1.0);
        assert_eq!(e.median(), 2.0);
    }

    #[test]
    fn censored_values_sort_last() {
        let e = ed(&[f64::INFINITY, 1.0]);
        assert_eq!(e.samples(), &[1.0, f64::INFINITY]);
        assert_eq!(e.survival(1e300), 0.5);
        assert!(EmpiricalDistribution::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn dkw_radius_values() {
        // sqrt(ln(200) / 20000)
        assert!((dkw_radius(10_000, 0.01) - 0.016_276_236_3).abs() < 1e-9);
        assert!((dkw_radius(40_000, 0.01) * 2.0 - dkw_radius(10_000, 0.01)).abs() < 1e-15);
        assert!((dkw_radius_two_sample(100, 100, 0.01) - (200f64.ln() / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ks_against_itself_and_known_cases() {
        let e = ed(&[0.5]);
        assert_eq!(e.ks_distance(|x| x.clamp(0.0, 1.0)), 0.5);
        let a = ed(&[1.0, 2.0, 3.0]);
        assert_eq!(a.ks_two_sample(&a), 0.0);
        let b = ed(&[4.0, 5.0]);
        assert_eq!(a.ks_two_sample(&b), 1.0);
        let c = ed(&[1.5, 2.5, 3.5]);
        assert!((a.ks_two_sample(&c) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn merge_is_a_multiset_union() {
        let a = ed(&[1.0, 4.0]);
        let b = ed(&[2.0, 4.0, f64::INFINITY]);
        assert_eq!(a.merge(&b), b.merge(&a));
        assert_eq!(a.merge(&b).samples(), &[1.0, 2.0, 4.0, 4.0, f64::INFINITY]);
        assert_eq!(a.merge(&EmpiricalDistribution::default()), a);
    }

    #[test]
    fn proportions_and_z() {
        let (p, se) = proportion(25, 100);
        assert_eq!(p, 0.25);
        assert!((se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(z_score(0.5, 0.0, 0.5, 0.0), 0.0);
        assert!((z_score(0.5, 0.03, 0.46, 0.04) - 0.8).abs() < 1e-12);
        assert!((exp_cdf(0.5)(2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }
}
