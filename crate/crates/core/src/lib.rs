//! Exponential last-passage percolation: environments, geodesics, exit
//! points, coalescence, Busemann trees and their duals, TASEP, and the
//! Monte Carlo machinery used to check them.

pub mod busemann;
pub mod coalescence;
pub mod env;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod lpp;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod tasep;

pub use env::{EnvKind, Environment, Manifest, SeededField, WeightSource};
pub use error::{Error, Result};
pub use lattice::{ExitPoint, LatticePath, Orientation, Point, Region};
pub use rng::{replicate_seed, sample_exp, RngStream};
