//! Lattice points, rectangles, paths and signed exit labels.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0 };
    pub const E1: Point = Point { x: 1, y: 0 };
    pub const E2: Point = Point { x: 0, y: 1 };
    pub const D: Point = Point { x: 1, y: 1 };

    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    /// Componentwise order: `self <= other` in both coordinates.
    pub fn le(self, other: Point) -> bool {
        self.x <= other.x && self.y <= other.y
    }

    /// Anti-diagonal index `x + y`; every unit step changes it by one.
    pub fn level(self) -> i64 {
        self.x + self.y
    }

    pub fn min(self, other: Point) -> Point {
        Point::new(self.x.min(other.x), self.y.min(other.y))
    }

    pub fn max(self, other: Point) -> Point {
        Point::new(self.x.max(other.x), self.y.max(other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Inclusive integer rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub x_min: i64,
    pub y_min: i64,
    pub x_max: i64,
    pub y_max: i64,
}

impl Region {
    pub fn new(x_min: i64, y_min: i64, x_max: i64, y_max: i64) -> Result<Self> {
        if x_min > x_max || y_min > y_max {
            return domain(format!("empty region [{x_min},{x_max}]x[{y_min},{y_max}]"));
        }
        let r = Region {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if r.checked_area().is_none() {
            return domain("region area overflows the address space");
        }
        Ok(r)
    }

    /// Rectangle spanned by two corners `lo <= hi`.
    pub fn spanned(lo: Point, hi: Point) -> Result<Self> {
        Region::new(lo.x, lo.y, hi.x, hi.y)
    }

    /// The square `[0, side] x [0, side]`.
    pub fn square(side: i64) -> Result<Self> {
        Region::new(0, 0, side, side)
    }

    pub fn width(&self) -> usize {
        (self.x_max - self.x_min + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_max - self.y_min + 1) as usize
    }

    fn checked_area(&self) -> Option<usize> {
        let w = usize::try_from(self.x_max.checked_sub(self.x_min)?.checked_add(1)?).ok()?;
        let h = usize::try_from(self.y_max.checked_sub(self.y_min)?.checked_add(1)?).ok()?;
        let area = w.checked_mul(h)?;
        // Keep byte offsets of an f64 field representable.
        area.checked_mul(8).map(|_| area)
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn lower_left(&self) -> Point {
        Point::new(self.x_min, self.y_min)
    }

    pub fn upper_right(&self) -> Point {
        Point::new(self.x_max, self.y_max)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.contains(other.lower_left()) && self.contains(other.upper_right())
    }

    /// Row-major offset of `p`; caller guarantees containment.
    #[inline]
    pub fn index(&self, p: Point) -> usize {
        debug_assert!(self.contains(p), "{p} outside {self:?}");
        (p.y - self.y_min) as usize * self.width() + (p.x - self.x_min) as usize
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (self.y_min..=self.y_max)
            .flat_map(move |y| (self.x_min..=self.x_max).map(move |x| Point::new(x, y)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    UpRight,
    DownLeft,
}

/// A lattice path with unit steps in a fixed orientation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    points: Vec<Point>,
    orientation: Orientation,
}

impl LatticePath {
    /// Validates that consecutive points differ by a unit step of the orientation.
    pub fn new(points: Vec<Point>, orientation: Orientation) -> Result<Self> {
        if points.is_empty() {
            return domain("a lattice path needs at least one point");
        }
        for w in points.windows(2) {
            let d = w[1] - w[0];
            let ok = match orientation {
                Orientation::UpRight => d == Point::E1 || d == Point::E2,
                Orientation::DownLeft => {
                    d == Point::ORIGIN - Point::E1 || d == Point::ORIGIN - Point::E2
                }
            };
            if !ok {
                return domain(format!("non-unit step {} -> {}", w[0], w[1]));
            }
        }
        Ok(LatticePath {
            points,
            orientation,
        })
    }

    pub(crate) fn from_trusted(points: Vec<Point>, orientation: Orientation) -> Self {
        debug_assert!(LatticePath::new(points.clone(), orientation).is_ok());
        LatticePath {
            points,
            orientation,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains(&p)
    }

    /// The same vertices traversed in the opposite orientation.
    pub fn reversed(&self) -> LatticePath {
        let mut points = self.points.clone();
        points.reverse();
        let orientation = match self.orientation {
            Orientation::UpRight => Orientation::DownLeft,
            Orientation::DownLeft => Orientation::UpRight,
        };
        LatticePath {
            points,
            orientation,
        }
    }
}

/// Signed boundary location: `z > 0` is `(z, 0)`, `z < 0` is `(0, -z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExitPoint(i64);

impl ExitPoint {
    pub fn new(z: i64) -> Result<Self> {
        if z == 0 {
            return domain("exit label 0 is not a boundary exit");
        }
        Ok(ExitPoint(z))
    }

    /// Label of an axis vertex other than the origin.
    pub fn from_axis_point(p: Point) -> Result<Self> {
        match (p.x, p.y) {
            (x, 0) if x > 0 => Ok(ExitPoint(x)),
            (0, y) if y > 0 => Ok(ExitPoint(-y)),
            _ => domain(format!("{p} is not a non-origin axis vertex")),
        }
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn point(self) -> Point {
        if self.0 > 0 {
            Point::new(self.0, 0)
        } else {
            Point::new(0, -self.0)
        }
    }
}

impl fmt::Display for ExitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_rejects_inverted_bounds() {
        assert!(Region::new(1, 0, 0, 0).is_err());
        assert!(Region::new(0, 0, i64::MAX, i64::MAX).is_err());
        assert_eq!(Region::new(-2, 0, 2, 1).unwrap().area(), 10);
    }

    #[test]
    fn path_validation() {
        let ok = vec![Point::new(0, 0), Point::new(0, 1), Point::new(1, 1)];
        assert!(LatticePath::new(ok.clone(), Orientation::UpRight).is_ok());
        assert!(LatticePath::new(ok, Orientation::DownLeft).is_err());
        let diag = vec![Point::new(0, 0), Point::new(1, 1)];
        assert!(LatticePath::new(diag, Orientation::UpRight).is_err());
    }

    #[test]
    fn exit_point_sign_convention() {
        assert!(ExitPoint::new(0).is_err());
        assert_eq!(ExitPoint::new(3).unwrap().point(), Point::new(3, 0));
        assert_eq!(ExitPoint::new(-2).unwrap().point(), Point::new(0, 2));
        assert_eq!(
            ExitPoint::from_axis_point(Point::new(0, 5))
                .unwrap()
                .value(),
            -5
        );
        assert!(ExitPoint::from_axis_point(Point::ORIGIN).is_err());
        assert!(ExitPoint::from_axis_point(Point::new(1, 1)).is_err());
    }
}
