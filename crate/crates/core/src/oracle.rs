//! Exhaustive reference computations for small grids.

use crate::env::WeightSource;
use crate::error::{domain, Result};
use crate::lattice::Point;

/// Largest number of steps accepted by [`enumerate_last_passage`].
pub const MAX_ENUMERATION_STEPS: i64 = 24;

/// `L(x, y)` by walking every up-right path from `x` to `y`.
pub fn enumerate_last_passage<S: WeightSource + ?Sized>(src: &S, x: Point, y: Point) -> Result<f64> {
    if !x.le(y) {
        return domain(format!("{y} is not up-right of {x}"));
    }
    if (y - x).level() > MAX_ENUMERATION_STEPS {
        return domain("grid too large to enumerate");
    }
    fn walk<S: WeightSource + ?Sized>(src: &S, p: Point, y: Point, acc: f64, best: &mut f64) {
        if p == y {
            *best = best.max(acc);
            return;
        }
        for q in [p + Point::E1, p + Point::E2] {
            if q.le(y) {
                walk(src, q, y, acc + src.weight_at(q), best);
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    walk(src, x, y, 0.0, &mut best);
    Ok(best)
}

/// Number of up-right paths from `x` to `y`.
pub fn path_count(x: Point, y: Point) -> u64 {
    let (a, b) = ((y.x - x.x) as u64, (y.y - x.y) as u64);
    (1..=b).fold(1u64, |c, i| c * (a + i) / i)
}
