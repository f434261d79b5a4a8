//! Last-passage times, geodesics and the boundary model.

pub mod mass;
pub mod sweep;
pub mod variational;

use crate::env::{EnvKind, WeightSource};
use crate::error::{domain, resource, Result};
use crate::lattice::{ExitPoint, LatticePath, Point, Region};

pub use mass::{evolve_mass, MassEvolution, MassField};
pub use sweep::{BackwardSweep, ForwardSweep, Keep};
pub use variational::{variational_exit, VariationalExit};

/// `L(x, y)`: maximal start-exclusive weight over up-right paths.
pub fn last_passage<S: WeightSource + ?Sized>(src: &S, x: Point, y: Point) -> Result<f64> {
    let sweep = ForwardSweep::run(src, x, y, Keep::Edge)?;
    Ok(sweep.time(y).expect("corner is on the kept edge"))
}

/// The maximizing path from `x` to `y`, reconstructed by backtracking.
pub fn geodesic<S: WeightSource + ?Sized>(src: &S, x: Point, y: Point) -> Result<LatticePath> {
    ForwardSweep::run(src, x, y, Keep::Edge)?.path_to(y)
}

/// Start-exclusive weight of a path, summed in path order.
pub fn path_weight<S: WeightSource + ?Sized>(src: &S, path: &LatticePath) -> Result<f64> {
    let mut cell = [0.0];
    let mut total = 0.0;
    for &p in &path.points()[1..] {
        let r = Region::spanned(p, p)?;
        if !src.covers(&r) {
            return domain(format!("{p} is outside the environment"));
        }
        src.fill_row(p.y, p.x, &mut cell);
        total += cell[0];
    }
    Ok(total)
}

fn require_boundary<S: WeightSource + ?Sized>(benv: &S) -> Result<()> {
    if benv.kind() != EnvKind::Boundary {
        return domain("operation requires a boundary environment");
    }
    Ok(())
}

/// Boundary last-passage time from the origin.
pub fn lbar<S: WeightSource + ?Sized>(benv: &S, x: Point) -> Result<f64> {
    require_boundary(benv)?;
    last_passage(benv, Point::ORIGIN, x)
}

/// Last axis vertex on the boundary geodesic from the origin to `x >= (1,1)`.
pub fn exit_point<S: WeightSource + ?Sized>(benv: &S, x: Point) -> Result<ExitPoint> {
    require_boundary(benv)?;
    if x.x < 1 || x.y < 1 {
        return domain(format!("exit points are defined for x >= (1,1), got {x}"));
    }
    let sweep = ForwardSweep::run(benv, Point::ORIGIN, x, Keep::Edge)?;
    let axis = sweep
        .backtrack(x)
        .find(|p| p.x == 0 || p.y == 0)
        .expect("every path from the origin starts on the axes");
    ExitPoint::from_axis_point(axis)
}

/// Boundary last-passage times and exit labels along row `n`, for
/// `x = 0..=width`. The label at `(0, n)` is `-n`.
pub fn exit_row<S: WeightSource + ?Sized>(
    benv: &S,
    width: i64,
    n: i64,
) -> Result<(Vec<f64>, Vec<i64>)> {
    require_boundary(benv)?;
    if width < 1 || n < 1 {
        return domain("exit rows need width >= 1 and n >= 1");
    }
    let rect = Region::new(0, 0, width, n)?;
    if !benv.covers(&rect) {
        return domain(format!("{rect:?} is outside the boundary environment"));
    }
    let w = rect.width();
    let mut times = vec![0.0f64; w];
    let mut labels: Vec<i64> = (0..w as i64).collect();
    let mut wrow = vec![0.0f64; w];
    benv.fill_row(0, 0, &mut wrow);
    for xi in 1..w {
        times[xi] = times[xi - 1] + wrow[xi];
    }
    for y in 1..=n {
        benv.fill_row(y, 0, &mut wrow);
        times[0] += wrow[0];
        labels[0] = -y;
        for xi in 1..w {
            let left = times[xi - 1];
            let below = times[xi];
            if left > below {
                times[xi] = left + wrow[xi];
                labels[xi] = labels[xi - 1];
            } else {
                times[xi] = below + wrow[xi];
            }
        }
    }
    Ok((times, labels))
}

/// Result of scanning the exit-point process on `[-m, m]` at height `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitScan {
    /// Distinct exit labels in `[-m, m]`, increasing.
    pub attained: Vec<i64>,
    /// First `x` with `Z(x, n) > m`.
    pub x_stop: i64,
    /// Width of the environment window finally swept.
    pub width: i64,
}

impl ExitScan {
    pub fn count(&self) -> usize {
        self.attained.len()
    }
}

/// Counts the distinct values of `Z(x, n)`, `x >= 1`, that fall in `[-m, m]`.
///
/// `x -> Z(x, n)` is non-decreasing, so the scan stops at the first `x` with
/// `Z(x, n) > m`. The window doubles until that happens or `width_cap` is hit.
pub fn exit_interval_count<S: WeightSource + ?Sized>(
    benv: &S,
    n: i64,
    m: i64,
    width_cap: i64,
) -> Result<ExitScan> {
    require_boundary(benv)?;
    if !(1 <= m && m < n) {
        return domain(format!("need 1 <= m < n, got m={m}, n={n}"));
    }
    let mut width = (2 * (n + m)).max(16);
    loop {
        if width > width_cap {
            return resource(format!(
                "exit scan at n={n}, m={m} needs a window wider than {width_cap}"
            ));
        }
        let (_, labels) = exit_row(benv, width, n)?;
        let mut attained = Vec::new();
        let mut prev = i64::MIN;
        for x in 1..=width {
            let z = labels[x as usize];
            debug_assert!(
                z != 0 && z >= prev,
                "exit labels must be nonzero and monotone"
            );
            if z > m {
                return Ok(ExitScan {
                    attained,
                    x_stop: x,
                    width,
                });
            }
            if z >= -m && z != prev {
                attained.push(z);
            }
            prev = z;
        }
        width *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, SeededField};

    fn boundary_2x2(h: f64, v: f64, inner: f64) -> Environment {
        // Rows y=0: (0,0),(1,0); y=1: (0,1),(1,1).
        Environment::from_weights(
            Region::square(1).unwrap(),
            EnvKind::Boundary,
            vec![0.0, h, v, inner],
        )
        .unwrap()
    }

    #[test]
    fn trivial_passage_times() {
        let f = SeededField::interior(3);
        let x = Point::new(4, -2);
        assert_eq!(last_passage(&f, x, x).unwrap(), 0.0);
        let env = Environment::gen_interior(Region::new(0, -5, 10, 5).unwrap(), 3).unwrap();
        let along = last_passage(&env, x, x + Point::new(2, 0)).unwrap();
        let expect = env.weight(x + Point::E1).unwrap() + env.weight(x + Point::new(2, 0)).unwrap();
        assert_eq!(along, expect);
        assert!(last_passage(&env, Point::new(1, 1), Point::new(0, 2)).is_err());
        assert!(last_passage(&env, Point::new(1, 1), Point::new(11, 2)).is_err());
    }

    #[test]
    fn geodesic_shapes() {
        let env = Environment::from_weights(
            Region::square(1).unwrap(),
            EnvKind::Interior,
            vec![0.0, 2.0, 3.0, 1.0],
        )
        .unwrap();
        let g = geodesic(&env, Point::ORIGIN, Point::new(1, 1)).unwrap();
        assert_eq!(
            g.points(),
            &[Point::ORIGIN, Point::new(0, 1), Point::new(1, 1)]
        );
        assert_eq!(path_weight(&env, &g).unwrap(), 4.0);
        let single = geodesic(&env, Point::new(1, 0), Point::new(1, 0)).unwrap();
        assert_eq!(single.len(), 1);
        let row = geodesic(&env, Point::new(0, 1), Point::new(1, 1)).unwrap();
        assert_eq!(row.points(), &[Point::new(0, 1), Point::new(1, 1)]);
    }

    #[test]
    fn lbar_small_cases() {
        let env = boundary_2x2(5.0, 1.0, 0.5);
        assert_eq!(lbar(&env, Point::ORIGIN).unwrap(), 0.0);
        assert_eq!(lbar(&env, Point::new(1, 0)).unwrap(), 5.0);
        assert_eq!(lbar(&env, Point::new(1, 1)).unwrap(), 5.5);
        let int = Environment::gen_interior(Region::square(2).unwrap(), 1).unwrap();
        assert!(lbar(&int, Point::new(1, 1)).is_err());
    }

    #[test]
    fn exit_point_small_cases() {
        assert_eq!(
            exit_point(&boundary_2x2(5.0, 1.0, 0.5), Point::new(1, 1))
                .unwrap()
                .value(),
            1
        );
        assert_eq!(
            exit_point(&boundary_2x2(1.0, 5.0, 0.5), Point::new(1, 1))
                .unwrap()
                .value(),
            -1
        );
        assert!(exit_point(&boundary_2x2(1.0, 5.0, 0.5), Point::new(1, 0)).is_err());
    }

    #[test]
    fn exit_row_matches_pointwise_exits() {
        let f = SeededField::boundary(8);
        let (times, labels) = exit_row(&f, 30, 12).unwrap();
        for x in 1..=30 {
            let p = Point::new(x, 12);
            assert_eq!(labels[x as usize], exit_point(&f, p).unwrap().value());
            assert_eq!(times[x as usize], lbar(&f, p).unwrap());
        }
        assert!(labels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn exit_count_zero_when_exits_jump_over_the_interval() {
        // Both axes carry weight 10 per site, the interior almost nothing:
        // Z(x, 3) = -3 until the horizontal axis overtakes at x = 3.
        let (w, h) = (41usize, 4usize);
        let mut weights = vec![0.001; w * h];
        weights[0] = 0.0;
        for x in 1..w {
            weights[x] = 10.0;
        }
        for y in 1..h {
            weights[y * w] = 10.0;
        }
        let env = Environment::from_weights(
            Region::new(0, 0, 40, 3).unwrap(),
            EnvKind::Boundary,
            weights,
        )
        .unwrap();
        assert_eq!(exit_point(&env, Point::new(2, 3)).unwrap().value(), -3);
        assert_eq!(exit_point(&env, Point::new(3, 3)).unwrap().value(), 3);
        let scan = exit_interval_count(&env, 3, 1, 40).unwrap();
        assert_eq!(scan.count(), 0);
        assert_eq!(scan.x_stop, 3);
        let scan = exit_interval_count(&env, 3, 2, 40).unwrap();
        assert_eq!(scan.count(), 0);
        let scan = exit_interval_count(&env, 4, 3, 40);
        assert!(scan.is_err(), "row 4 is outside the window");
    }

    #[test]
    fn exit_count_domain_and_cap() {
        let f = SeededField::boundary(1);
        assert!(exit_interval_count(&f, 4, 4, 1000).is_err());
        assert!(exit_interval_count(&f, 4, 0, 1000).is_err());
        assert!(matches!(
            exit_interval_count(&f, 40, 5, 8),
            Err(crate::Error::Resource(_))
        ));
    }
}
