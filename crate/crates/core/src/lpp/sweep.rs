//! Row-by-row last-passage sweeps with a one-bit step field.
//!
//! Path weights exclude the start vertex. Exact ties between the two
//! candidate neighbours resolve to the vertical (`e2`) one.

use bitvec::prelude::*;

use crate::env::WeightSource;
use crate::error::{domain, resource, Result};
use crate::lattice::{LatticePath, Orientation, Point, Region};

/// Largest rectangle a single sweep may cover (one bit per site).
pub const MAX_SWEEP_SITES: usize = 1 << 33;

pub type StepBits = BitVec<u64, Lsb0>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    /// Keep every passage time.
    All,
    /// Keep only the last row swept.
    Edge,
}

fn check_rect<S: WeightSource + ?Sized>(src: &S, lo: Point, hi: Point) -> Result<Region> {
    if !lo.le(hi) {
        return domain(format!("{lo} is not below {hi} componentwise"));
    }
    let rect = Region::spanned(lo, hi)?;
    if !src.covers(&rect) {
        return domain(format!("rectangle {lo}..{hi} is outside the environment"));
    }
    if rect.area() > MAX_SWEEP_SITES {
        return resource(format!(
            "sweep over {} sites exceeds the cap {MAX_SWEEP_SITES}",
            rect.area()
        ));
    }
    Ok(rect)
}

#[inline]
fn set_bit(words: &mut [u64], idx: usize) {
    words[idx >> 6] |= 1u64 << (idx & 63);
}

/// `L(source, y)` for every `y` in `[source, corner]`.
#[derive(Clone, Debug)]
pub struct ForwardSweep {
    rect: Region,
    /// Set where the chosen predecessor is `y - e1`.
    from_left: StepBits,
    times: Vec<f64>,
    keep: Keep,
}

impl ForwardSweep {
    pub fn run<S: WeightSource + ?Sized>(
        src: &S,
        source: Point,
        corner: Point,
        keep: Keep,
    ) -> Result<Self> {
        let rect = check_rect(src, source, corner)?;
        let (w, h) = (rect.width(), rect.height());
        let mut from_left: StepBits = bitvec![u64, Lsb0; 0; rect.area()];
        let words = from_left.as_raw_mut_slice();
        let mut times = match keep {
            Keep::All => vec![0.0; rect.area()],
            Keep::Edge => Vec::new(),
        };
        let mut row = vec![0.0f64; w];
        let mut wrow = vec![0.0f64; w];
        for yi in 0..h {
            src.fill_row(rect.y_min + yi as i64, rect.x_min, &mut wrow);
            let base = yi * w;
            if yi == 0 {
                row[0] = 0.0;
                for xi in 1..w {
                    row[xi] = row[xi - 1] + wrow[xi];
                    set_bit(words, xi);
                }
            } else {
                row[0] += wrow[0];
                for xi in 1..w {
                    let left = row[xi - 1];
                    let below = row[xi];
                    if left > below {
                        row[xi] = left + wrow[xi];
                        set_bit(words, base + xi);
                    } else {
                        row[xi] = below + wrow[xi];
                    }
                }
            }
            if keep == Keep::All {
                times[base..base + w].copy_from_slice(&row);
            }
        }
        if keep == Keep::Edge {
            times = row;
        }
        Ok(ForwardSweep {
            rect,
            from_left,
            times,
            keep,
        })
    }

    pub fn rect(&self) -> Region {
        self.rect
    }

    pub fn source(&self) -> Point {
        self.rect.lower_left()
    }

    /// Passage time at `p`, if it was kept.
    pub fn time(&self, p: Point) -> Option<f64> {
        if !self.rect.contains(p) {
            return None;
        }
        match self.keep {
            Keep::All => Some(self.times[self.rect.index(p)]),
            Keep::Edge if p.y == self.rect.y_max => {
                Some(self.times[(p.x - self.rect.x_min) as usize])
            }
            Keep::Edge => None,
        }
    }

    /// Argmax predecessor of `p`; `None` at the source.
    #[inline]
    pub fn pred(&self, p: Point) -> Option<Point> {
        if p == self.source() {
            return None;
        }
        if self.from_left[self.rect.index(p)] {
            Some(p - Point::E1)
        } else {
            Some(p - Point::E2)
        }
    }

    /// Vertices from `p` back to the source, `p` first.
    pub fn backtrack(&self, p: Point) -> impl Iterator<Item = Point> + '_ {
        debug_assert!(self.rect.contains(p));
        std::iter::successors(Some(p), move |&q| self.pred(q))
    }

    /// Up-right geodesic from the source to `p`.
    pub fn path_to(&self, p: Point) -> Result<LatticePath> {
        if !self.rect.contains(p) {
            return domain(format!("{p} is outside the swept rectangle"));
        }
        let mut pts: Vec<Point> = self.backtrack(p).collect();
        pts.reverse();
        Ok(LatticePath::from_trusted(pts, Orientation::UpRight))
    }
}

/// `L(x, sink)` for every `x` in `[corner, sink]`.
#[derive(Clone, Debug)]
pub struct BackwardSweep {
    rect: Region,
    /// Set where the chosen successor is `x + e1`.
    to_right: StepBits,
    times: Vec<f64>,
    keep: Keep,
}

impl BackwardSweep {
    pub fn run<S: WeightSource + ?Sized>(
        src: &S,
        corner: Point,
        sink: Point,
        keep: Keep,
    ) -> Result<Self> {
        let rect = check_rect(src, corner, sink)?;
        let (w, h) = (rect.width(), rect.height());
        let mut to_right: StepBits = bitvec![u64, Lsb0; 0; rect.area()];
        let words = to_right.as_raw_mut_slice();
        let mut times = match keep {
            Keep::All => vec![0.0; rect.area()],
            Keep::Edge => Vec::new(),
        };
        // gain_up[xi] = W(x, y + 1) + L((x, y + 1), sink) for the row above.
        let mut gain_up = vec![0.0f64; w];
        let mut row = vec![0.0f64; w];
        let mut wrow = vec![0.0f64; w];
        for yi in (0..h).rev() {
            src.fill_row(rect.y_min + yi as i64, rect.x_min, &mut wrow);
            let base = yi * w;
            if yi == h - 1 {
                row[w - 1] = 0.0;
                for xi in (0..w - 1).rev() {
                    row[xi] = wrow[xi + 1] + row[xi + 1];
                    set_bit(words, base + xi);
                }
            } else {
                row[w - 1] = gain_up[w - 1];
                for xi in (0..w - 1).rev() {
                    let right = wrow[xi + 1] + row[xi + 1];
                    let up = gain_up[xi];
                    if right > up {
                        row[xi] = right;
                        set_bit(words, base + xi);
                    } else {
                        row[xi] = up;
                    }
                }
            }
            for xi in 0..w {
                gain_up[xi] = wrow[xi] + row[xi];
            }
            if keep == Keep::All {
                times[base..base + w].copy_from_slice(&row);
            }
        }
        if keep == Keep::Edge {
            times = row;
        }
        Ok(BackwardSweep {
            rect,
            to_right,
            times,
            keep,
        })
    }

    pub fn rect(&self) -> Region {
        self.rect
    }

    pub fn sink(&self) -> Point {
        self.rect.upper_right()
    }

    pub fn time(&self, p: Point) -> Option<f64> {
        if !self.rect.contains(p) {
            return None;
        }
        match self.keep {
            Keep::All => Some(self.times[self.rect.index(p)]),
            Keep::Edge if p.y == self.rect.y_min => {
                Some(self.times[(p.x - self.rect.x_min) as usize])
            }
            Keep::Edge => None,
        }
    }

    /// Argmax successor of `p`; `None` at the sink.
    #[inline]
    pub fn succ(&self, p: Point) -> Option<Point> {
        if p == self.sink() {
            return None;
        }
        if self.to_right[self.rect.index(p)] {
            Some(p + Point::E1)
        } else {
            Some(p + Point::E2)
        }
    }

    /// Vertices from `p` forward to the sink, `p` first.
    pub fn trace(&self, p: Point) -> impl Iterator<Item = Point> + '_ {
        debug_assert!(self.rect.contains(p));
        std::iter::successors(Some(p), move |&q| self.succ(q))
    }

    pub fn path_from(&self, p: Point) -> Result<LatticePath> {
        if !self.rect.contains(p) {
            return domain(format!("{p} is outside the swept rectangle"));
        }
        Ok(LatticePath::from_trusted(
            self.trace(p).collect(),
            Orientation::UpRight,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvKind, Environment, SeededField};

    fn tiny() -> Environment {
        // Row-major over [0,1]^2: W(0,0)=9, W(1,0)=2, W(0,1)=3, W(1,1)=1.
        Environment::from_weights(
            Region::square(1).unwrap(),
            EnvKind::Interior,
            vec![9.0, 2.0, 3.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn forward_two_by_two() {
        let s = ForwardSweep::run(&tiny(), Point::ORIGIN, Point::new(1, 1), Keep::All).unwrap();
        assert_eq!(s.time(Point::ORIGIN), Some(0.0));
        assert_eq!(s.time(Point::new(1, 1)), Some(4.0));
        let path = s.path_to(Point::new(1, 1)).unwrap();
        assert_eq!(
            path.points(),
            &[Point::ORIGIN, Point::new(0, 1), Point::new(1, 1)]
        );
    }

    #[test]
    fn backward_two_by_two() {
        let s = BackwardSweep::run(&tiny(), Point::ORIGIN, Point::new(1, 1), Keep::All).unwrap();
        assert_eq!(s.time(Point::new(1, 1)), Some(0.0));
        assert_eq!(s.time(Point::ORIGIN), Some(4.0));
        let path = s.path_from(Point::ORIGIN).unwrap();
        assert_eq!(
            path.points(),
            &[Point::ORIGIN, Point::new(0, 1), Point::new(1, 1)]
        );
    }

    #[test]
    fn ties_prefer_vertical() {
        let env = Environment::from_weights(
            Region::square(1).unwrap(),
            EnvKind::Interior,
            vec![0.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let f = ForwardSweep::run(&env, Point::ORIGIN, Point::new(1, 1), Keep::Edge).unwrap();
        assert_eq!(f.pred(Point::new(1, 1)), Some(Point::new(1, 0)));
        let b = BackwardSweep::run(&env, Point::ORIGIN, Point::new(1, 1), Keep::Edge).unwrap();
        assert_eq!(b.succ(Point::ORIGIN), Some(Point::new(0, 1)));
    }

    #[test]
    fn edge_and_full_agree() {
        let f = SeededField::interior(5);
        let (lo, hi) = (Point::new(-3, 2), Point::new(17, 11));
        let all = ForwardSweep::run(&f, lo, hi, Keep::All).unwrap();
        let edge = ForwardSweep::run(&f, lo, hi, Keep::Edge).unwrap();
        for x in lo.x..=hi.x {
            let p = Point::new(x, hi.y);
            assert_eq!(all.time(p), edge.time(p));
        }
        let ball = BackwardSweep::run(&f, lo, hi, Keep::All).unwrap();
        let bedge = BackwardSweep::run(&f, lo, hi, Keep::Edge).unwrap();
        for x in lo.x..=hi.x {
            let p = Point::new(x, lo.y);
            assert_eq!(ball.time(p), bedge.time(p));
        }
        // L(lo, hi) is the same quantity from either side.
        let a = all.time(hi).unwrap();
        let b = ball.time(lo).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn rejects_unordered_or_uncovered() {
        let f = SeededField::boundary(1);
        assert!(ForwardSweep::run(&f, Point::new(2, 2), Point::new(1, 3), Keep::Edge).is_err());
        assert!(ForwardSweep::run(&f, Point::new(-1, 0), Point::new(1, 3), Keep::Edge).is_err());
    }
}
