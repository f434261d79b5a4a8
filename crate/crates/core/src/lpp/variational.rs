//! Exit points as locations of maxima.
//!
//! `Lbar(x, n) = max_z { M(z) + L_z(x, n) }` over boundary entries
//! `z in [-n, x]`. `M(z)` sums the axis weights up to the entry vertex and
//! `L_z` is the best path that leaves the axis there and stays in the strict
//! interior. This module evaluates every term with its own small dynamic
//! program, independent of the sweep code, and serves as an oracle for
//! [`super::exit_point`].

use crate::env::{EnvKind, Environment, WeightSource};
use crate::error::{domain, Result};
use crate::lattice::{ExitPoint, Point};

fn check(benv: &Environment, x: Point) -> Result<()> {
    if benv.kind() != EnvKind::Boundary {
        return domain("operation requires a boundary environment");
    }
    if x.x < 1 || x.y < 1 {
        return domain(format!("variational exits need x >= (1,1), got {x}"));
    }
    if !benv.region().contains(x) {
        return domain(format!("{x} is outside the environment"));
    }
    Ok(())
}

/// Accumulated axis weight `M(z)`.
pub fn boundary_mass(benv: &Environment, z: i64) -> Result<f64> {
    let mut total = 0.0;
    for k in 1..=z.abs() {
        let p = if z > 0 {
            Point::new(k, 0)
        } else {
            Point::new(0, k)
        };
        total += benv.weight(p)?;
    }
    Ok(total)
}

/// First interior vertex of a path leaving the axis at `z`. The origin term
/// (`z = 0`) enters diagonally at `(1,1)`; it is dominated by `z = +-1`.
fn entry_vertex(z: i64) -> Point {
    match z {
        z if z > 0 => Point::new(z, 1),
        z if z < 0 => Point::new(1, -z),
        _ => Point::new(1, 1),
    }
}

/// `L_z(x)`: heaviest up-right path from the entry vertex of `z` to `x`,
/// counting both ends.
pub fn entry_passage(benv: &Environment, z: i64, x: Point) -> Result<f64> {
    check(benv, x)?;
    if z < -x.y || z > x.x {
        return domain(format!("z={z} outside [-{}, {}]", x.y, x.x));
    }
    let e = entry_vertex(z);
    let (w, h) = ((x.x - e.x + 1) as usize, (x.y - e.y + 1) as usize);
    let mut best = vec![0.0f64; w * h];
    for j in 0..h {
        for i in 0..w {
            let here = benv.weight(Point::new(e.x + i as i64, e.y + j as i64))?;
            let prev = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => best[(j - 1) * w],
                (_, 0) => best[i - 1],
                _ => best[(j - 1) * w + i].max(best[j * w + i - 1]),
            };
            best[j * w + i] = prev + here;
        }
    }
    Ok(best[w * h - 1])
}

/// Every term `(z, M(z) + L_z(x))` for `z in [-x.y, x.x]`, `z = 0` included.
pub fn variational_terms(benv: &Environment, x: Point) -> Result<Vec<(i64, f64)>> {
    check(benv, x)?;
    (-x.y..=x.x)
        .map(|z| Ok((z, boundary_mass(benv, z)? + entry_passage(benv, z, x)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationalExit {
    pub exit: ExitPoint,
    /// The maximal term, equal to `Lbar(x)`.
    pub value: f64,
}

/// Argmax of the variational terms under the signed exit convention.
pub fn variational_exit(benv: &Environment, x: Point) -> Result<VariationalExit> {
    let terms = variational_terms(benv, x)?;
    let (z, value) =
        terms.into_iter().fold(
            (0, f64::NEG_INFINITY),
            |best, t| if t.1 > best.1 { t } else { best },
        );
    if z == 0 {
        return domain("the origin term attained the maximum; axis weights must be positive");
    }
    Ok(VariationalExit {
        exit: ExitPoint::new(z)?,
        value,
    })
}
