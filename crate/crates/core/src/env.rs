//! Seeded exponential environments, with and without the stationary boundary.
//!
//! Weights are a pure function of `(master_seed, kind, site)`. A
//! [`SeededField`] generates them lazily row by row over the whole lattice
//! (or the quadrant, for the boundary model); an [`Environment`] is a dense
//! materialized window of such a field.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, Result};
use crate::lattice::{Point, Region};
use crate::rng::{exp_from_bits, KeyedStreams};

pub const GENERATOR_VERSION: &str = "chacha8-invcdf-v1";

/// Rate of the axis weights of the boundary model (mean 2).
pub const BOUNDARY_RATE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// i.i.d. Exp(1) on every site of Z^2.
    Interior,
    /// Quadrant field: 0 at the origin, Exp(1/2) on the positive axes,
    /// Exp(1) inside. Interior sites coincide with the interior field of the
    /// same seed.
    Boundary,
}

/// Anything that can produce rows of weights.
pub trait WeightSource: Sync {
    fn kind(&self) -> EnvKind;
    fn master_seed(&self) -> u64;
    /// Whether every site of `region` has a weight.
    fn covers(&self, region: &Region) -> bool;
    /// Writes the weights of sites `(x0, y), (x0 + 1, y), ...` into `out`.
    /// The caller guarantees that the row segment is covered.
    fn fill_row(&self, y: i64, x0: i64, out: &mut [f64]);

    /// Weight of a single covered site.
    fn weight_at(&self, p: Point) -> f64 {
        let mut cell = [0.0];
        self.fill_row(p.y, p.x, &mut cell);
        cell[0]
    }
}

/// Lazily generated unbounded field.
#[derive(Clone, Debug)]
pub struct SeededField {
    master_seed: u64,
    kind: EnvKind,
    interior: KeyedStreams,
    axis: KeyedStreams,
}

impl SeededField {
    pub fn new(master_seed: u64, kind: EnvKind) -> Self {
        SeededField {
            master_seed,
            kind,
            interior: KeyedStreams::new(master_seed, "interior"),
            axis: KeyedStreams::new(master_seed, "axis"),
        }
    }

    pub fn interior(master_seed: u64) -> Self {
        SeededField::new(master_seed, EnvKind::Interior)
    }

    pub fn boundary(master_seed: u64) -> Self {
        SeededField::new(master_seed, EnvKind::Boundary)
    }

    fn fill_interior(&self, y: i64, x0: i64, out: &mut [f64]) {
        let mut rng = self.interior.at(y, x0);
        for w in out.iter_mut() {
            *w = exp_from_bits(1.0, rng.next_u64());
        }
    }
}

impl WeightSource for SeededField {
    fn kind(&self) -> EnvKind {
        self.kind
    }

    fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn covers(&self, region: &Region) -> bool {
        match self.kind {
            EnvKind::Interior => true,
            EnvKind::Boundary => region.x_min >= 0 && region.y_min >= 0,
        }
    }

    fn fill_row(&self, y: i64, x0: i64, out: &mut [f64]) {
        match self.kind {
            EnvKind::Interior => self.fill_interior(y, x0, out),
            EnvKind::Boundary => {
                debug_assert!(y >= 0 && x0 >= 0);
                if out.is_empty() {
                    return;
                }
                if y == 0 {
                    // Horizontal axis: stream 0 addressed by x.
                    let mut rng = self.axis.at(0, x0);
                    for (i, w) in out.iter_mut().enumerate() {
                        let bits = rng.next_u64();
                        *w = if x0 + i as i64 == 0 {
                            0.0
                        } else {
                            exp_from_bits(BOUNDARY_RATE, bits)
                        };
                    }
                } else {
                    self.fill_interior(y, x0, out);
                    if x0 == 0 {
                        // Vertical axis: stream 1 addressed by y.
                        out[0] = exp_from_bits(BOUNDARY_RATE, self.axis.at(1, y).next_u64());
                    }
                }
            }
        }
    }
}

/// Reproducibility record of an environment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub kind: EnvKind,
    pub region: Region,
    pub generator_version: String,
}

/// Dense, immutable weights over a finite region.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    region: Region,
    weights: Vec<f64>,
    master_seed: u64,
    kind: EnvKind,
}

impl Environment {
    fn materialize(field: &SeededField, region: Region) -> Result<Self> {
        if !field.covers(&region) {
            return domain(format!("{region:?} is outside the {:?} field", field.kind));
        }
        let mut weights = Vec::new();
        if weights.try_reserve_exact(region.area()).is_err() {
            return resource(format!("cannot allocate {} weights", region.area()));
        }
        weights.resize(region.area(), 0.0);
        let w = region.width();
        for (row, y) in weights.chunks_mut(w).zip(region.y_min..=region.y_max) {
            field.fill_row(y, region.x_min, row);
        }
        Ok(Environment {
            region,
            weights,
            master_seed: field.master_seed,
            kind: field.kind,
        })
    }

    /// i.i.d. Exp(1) weights over `region`.
    pub fn gen_interior(region: Region, master_seed: u64) -> Result<Self> {
        Environment::materialize(&SeededField::interior(master_seed), region)
    }

    /// Boundary-model weights; `region` must be anchored at the origin.
    pub fn gen_boundary(region: Region, master_seed: u64) -> Result<Self> {
        if region.x_min != 0 || region.y_min != 0 {
            return domain("boundary environments must have their lower-left corner at the origin");
        }
        Environment::materialize(&SeededField::boundary(master_seed), region)
    }

    /// Regenerates the environment described by a manifest.
    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        if m.generator_version != GENERATOR_VERSION {
            return domain(format!("unknown generator version {}", m.generator_version));
        }
        match m.kind {
            EnvKind::Interior => Environment::gen_interior(m.region, m.master_seed),
            EnvKind::Boundary => Environment::gen_boundary(m.region, m.master_seed),
        }
    }

    /// Builds an environment from explicit weights (row-major over `region`).
    pub fn from_weights(region: Region, kind: EnvKind, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != region.area() {
            return domain(format!(
                "expected {} weights, got {}",
                region.area(),
                weights.len()
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return domain(format!("weights must be finite and nonnegative, got {w}"));
        }
        if kind == EnvKind::Boundary {
            if region.x_min != 0 || region.y_min != 0 {
                return domain(
                    "boundary environments must have their lower-left corner at the origin",
                );
            }
            if weights[0] != 0.0 {
                return domain("boundary environments carry weight 0 at the origin");
            }
        }
        Ok(Environment {
            region,
            weights,
            master_seed: 0,
            kind,
        })
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            master_seed: self.master_seed,
            kind: self.kind,
            region: self.region,
            generator_version: GENERATOR_VERSION.to_string(),
        }
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, p: Point) -> Option<f64> {
        self.region
            .contains(p)
            .then(|| self.weights[self.region.index(p)])
    }

    pub fn weight(&self, p: Point) -> Result<f64> {
        self.get(p)
            .map_or_else(|| domain(format!("{p} is outside {:?}", self.region)), Ok)
    }
}

impl WeightSource for Environment {
    fn kind(&self) -> EnvKind {
        self.kind
    }

    fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn covers(&self, region: &Region) -> bool {
        self.region.contains_region(region)
    }

    fn fill_row(&self, y: i64, x0: i64, out: &mut [f64]) {
        let start = self.region.index(Point::new(x0, y));
        out.copy_from_slice(&self.weights[start..start + out.len()]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
        let mut s = 0.0;
        let mut n = 0;
        for x in xs {
            s += x;
            n += 1;
        }
        (s / n as f64, n)
    }

    #[test]
    fn interior_is_deterministic() {
        let r = Region::new(-3, -2, 10, 5).unwrap();
        let a = Environment::gen_interior(r, 11).unwrap();
        let b = Environment::gen_interior(r, 11).unwrap();
        assert_eq!(a.weights(), b.weights());
        let c = Environment::gen_interior(r, 12).unwrap();
        assert_ne!(a.weights(), c.weights());
        assert_eq!(Environment::from_manifest(&a.manifest()).unwrap(), a);
    }

    #[test]
    fn subwindows_agree_with_enclosing_field() {
        let big = Environment::gen_interior(Region::new(-5, -5, 20, 20).unwrap(), 4).unwrap();
        let small = Environment::gen_interior(Region::new(3, 2, 9, 7).unwrap(), 4).unwrap();
        for p in small.region().points() {
            assert_eq!(small.get(p), big.get(p));
        }
    }

    #[test]
    fn interior_mean_near_one() {
        let env = Environment::gen_interior(Region::new(0, 0, 99, 99).unwrap(), 2024).unwrap();
        let (m, n) = mean(env.weights().iter().copied());
        assert_eq!(n, 10_000);
        assert!((0.9..=1.1).contains(&m), "mean {m}");
        assert!(env.weights().iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn boundary_layout() {
        let env = Environment::gen_boundary(Region::square(120).unwrap(), 9).unwrap();
        assert_eq!(env.weight(Point::ORIGIN).unwrap(), 0.0);
        // Interior sites match the interior field of the same seed.
        let int = Environment::gen_interior(Region::square(120).unwrap(), 9).unwrap();
        assert_eq!(env.get(Point::new(5, 7)), int.get(Point::new(5, 7)));
        assert_ne!(env.get(Point::new(5, 0)), int.get(Point::new(5, 0)));
        assert_ne!(env.get(Point::new(0, 5)), int.get(Point::new(0, 5)));
    }

    #[test]
    fn boundary_axis_and_interior_means() {
        let field = SeededField::boundary(77);
        let mut row = vec![0.0; 5001];
        field.fill_row(0, 0, &mut row);
        let mut axis: Vec<f64> = row[1..].to_vec();
        let mut col = vec![0.0; 1];
        for y in 1..=5000 {
            field.fill_row(y, 0, &mut col);
            axis.push(col[0]);
        }
        let (m, n) = mean(axis.into_iter());
        assert_eq!(n, 10_000);
        // Exp(1/2): mean 2, sd 2, 5 sigma over 1e4 samples is 0.1.
        assert!((1.9..=2.1).contains(&m), "axis mean {m}");

        let mut inner = vec![0.0; 100];
        let mut all = Vec::new();
        for y in 1..=100 {
            field.fill_row(y, 1, &mut inner);
            all.extend_from_slice(&inner);
        }
        let (m, _) = mean(all.into_iter());
        assert!((0.95..=1.05).contains(&m), "interior mean {m}");
    }

    #[test]
    fn boundary_requires_origin_anchor() {
        assert!(Environment::gen_boundary(Region::new(1, 0, 4, 4).unwrap(), 1).is_err());
        assert!(Environment::gen_boundary(Region::new(-1, 0, 4, 4).unwrap(), 1).is_err());
    }

    #[test]
    fn explicit_weights_validated() {
        let r = Region::new(0, 0, 1, 1).unwrap();
        assert!(Environment::from_weights(r, EnvKind::Interior, vec![1.0; 3]).is_err());
        assert!(
            Environment::from_weights(r, EnvKind::Interior, vec![1.0, -1.0, 0.0, 0.0]).is_err()
        );
        assert!(Environment::from_weights(r, EnvKind::Boundary, vec![1.0; 4]).is_err());
        assert!(Environment::from_weights(r, EnvKind::Boundary, vec![0.0, 1.0, 1.0, 1.0]).is_ok());
    }
}
