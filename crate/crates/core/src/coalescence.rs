//! Semi-infinite geodesics in direction (1,1) and their coalescence.
//!
//! The semi-infinite geodesic from `x` is approximated by the geodesic from
//! `x` to `(N, N)`. A coalescence point is accepted once it is identical for
//! targets `N` and `2N`; `N` doubles from `n0` up to `cap`.
//!
//! Two finite geodesics sharing a nearby endpoint are pushed together, so
//! this underestimates coalescence times unless `N` is far beyond them.
//! [`stationary_coalescence_below`] avoids the far target altogether by
//! sampling Busemann boundary values on a rectangle.

use serde::{Deserialize, Serialize};

use bitvec::prelude::*;
use rand::RngCore;

use crate::env::{WeightSource, BOUNDARY_RATE};
use crate::error::{domain, Result};
use crate::lattice::{LatticePath, Point, Region};
use crate::lpp::{BackwardSweep, Keep};
use crate::rng::{exp_from_bits, KeyedStreams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalescenceConfig {
    /// Initial target scale.
    pub n0: i64,
    /// Largest target scale tried.
    pub cap: i64,
}

impl CoalescenceConfig {
    /// `n0 = 16 m`, `cap = 256 m`.
    pub fn for_m(m: i64) -> Self {
        CoalescenceConfig {
            n0: 16 * m,
            cap: 256 * m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalescenceRecord {
    pub start_a: Point,
    pub start_b: Point,
    pub c: Point,
    /// Second coordinate of `c`.
    pub t: i64,
    /// Target scale at which `c` was confirmed (or the last one tried).
    pub n_used: i64,
    pub stabilized: bool,
}

/// Geodesics from every vertex of `[lo, (n, n)]` to `(n, n)`.
pub fn tree_to<S: WeightSource + ?Sized>(src: &S, lo: Point, n: i64) -> Result<BackwardSweep> {
    BackwardSweep::run(src, lo, Point::new(n, n), Keep::Edge)
}

/// `gamma(x, (n, n))`, the finite surrogate of the semi-infinite geodesic.
pub fn semi_geodesic<S: WeightSource + ?Sized>(src: &S, x: Point, n: i64) -> Result<LatticePath> {
    tree_to(src, x, n)?.path_from(x)
}

/// First vertex shared by the tree paths from `a` and `b`.
///
/// Both paths gain one level per step, so advancing whichever is behind
/// meets them at the first common vertex.
pub fn first_common(tree: &BackwardSweep, a: Point, b: Point) -> Point {
    let (mut p, mut q) = (a, b);
    while p != q {
        if p.level() <= q.level() {
            p = tree.succ(p).expect("paths end at the common sink");
        } else {
            q = tree.succ(q).expect("paths end at the common sink");
        }
    }
    p
}

fn check_starts(a: Point, b: Point, n0: i64) -> Result<()> {
    let top = a.x.max(a.y).max(b.x).max(b.y);
    if n0 <= top {
        return domain(format!(
            "initial scale {n0} must exceed every start coordinate ({top})"
        ));
    }
    Ok(())
}

/// Coalescence point of the semi-infinite geodesics from `a` and `b`.
pub fn coalescence_point<S: WeightSource + ?Sized>(
    src: &S,
    a: Point,
    b: Point,
    cfg: CoalescenceConfig,
) -> Result<CoalescenceRecord> {
    Ok(coalesce(src, a, b, cfg)?.0)
}

/// As [`coalescence_point`], also returning the tree at `n_used`.
pub(crate) fn coalesce<S: WeightSource + ?Sized>(
    src: &S,
    a: Point,
    b: Point,
    cfg: CoalescenceConfig,
) -> Result<(CoalescenceRecord, BackwardSweep)> {
    check_starts(a, b, cfg.n0)?;
    let lo = a.min(b);
    let mut n = cfg.n0;
    let mut tree = tree_to(src, lo, n)?;
    let mut c = first_common(&tree, a, b);
    let stabilized = loop {
        if 2 * n > cfg.cap {
            break false;
        }
        let tree2 = tree_to(src, lo, 2 * n)?;
        let c2 = first_common(&tree2, a, b);
        if c2 == c {
            break true;
        }
        n *= 2;
        (tree, c) = (tree2, c2);
    };
    let rec = CoalescenceRecord {
        start_a: a,
        start_b: b,
        c,
        t: c.y,
        n_used: n,
        stabilized,
    };
    Ok((rec, tree))
}

/// `c((m, 0), (0, m))`; its second coordinate is `T_m`.
pub fn coalescence_time<S: WeightSource + ?Sized>(
    src: &S,
    m: i64,
    cfg: CoalescenceConfig,
) -> Result<CoalescenceRecord> {
    if m < 1 {
        return domain(format!("m must be positive, got {m}"));
    }
    coalescence_point(src, Point::new(m, 0), Point::new(0, m), cfg)
}

/// Whether the target scale `factor * n_used` reproduces `c` (the soundness
/// spot check uses `factor = 4`).
pub fn recheck<S: WeightSource + ?Sized>(
    src: &S,
    rec: &CoalescenceRecord,
    factor: i64,
) -> Result<bool> {
    let tree = tree_to(src, rec.start_a.min(rec.start_b), factor * rec.n_used)?;
    Ok(first_common(&tree, rec.start_a, rec.start_b) == rec.c)
}

/// Coalescence resolved only below a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censored {
    /// The paths meet at this point, strictly below the level.
    Exact(Point),
    /// The paths are still apart in every row below this one.
    AtLeast(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensoredRecord {
    pub outcome: Censored,
    pub n_used: i64,
    pub stabilized: bool,
}

impl CensoredRecord {
    /// Second coordinate of `c`, or `+inf` when censored.
    pub fn t_or_inf(&self) -> f64 {
        match self.outcome {
            Censored::Exact(c) => c.y as f64,
            Censored::AtLeast(_) => f64::INFINITY,
        }
    }
}

fn prefixes(tree: &BackwardSweep, a: Point, b: Point, level: i64) -> (Vec<Point>, Vec<Point>) {
    let below = |p: &Point| p.y < level;
    (
        tree.trace(a).take_while(below).collect(),
        tree.trace(b).take_while(below).collect(),
    )
}

/// Decides where the semi-infinite geodesics from `a` and `b` meet, if they
/// do so in a row below `level`.
///
/// Only the parts of the two paths in rows `< level` matter, so it suffices
/// that those parts agree for targets `N` and `2N`; this stabilizes far more
/// often than the full coalescence point when the paths meet late.
pub fn coalescence_below<S: WeightSource + ?Sized>(
    src: &S,
    a: Point,
    b: Point,
    level: i64,
    cfg: CoalescenceConfig,
) -> Result<CensoredRecord> {
    check_starts(a, b, cfg.n0)?;
    if level <= a.y.max(b.y) {
        return domain(format!("level {level} must exceed the start rows"));
    }
    let lo = a.min(b);
    let mut n = cfg.n0;
    while n <= level {
        n *= 2;
    }
    let eval = |n: i64| -> Result<(Censored, (Vec<Point>, Vec<Point>))> {
        let tree = tree_to(src, lo, n)?;
        let c = first_common(&tree, a, b);
        let out = if c.y < level {
            Censored::Exact(c)
        } else {
            Censored::AtLeast(level)
        };
        Ok((out, prefixes(&tree, a, b, level)))
    };
    let (mut out, mut pre) = eval(n)?;
    let stabilized = loop {
        if 2 * n > cfg.cap {
            break false;
        }
        let (out2, pre2) = eval(2 * n)?;
        if pre2 == pre {
            break true;
        }
        n *= 2;
        (out, pre) = (out2, pre2);
    };
    Ok(CensoredRecord {
        outcome: out,
        n_used: n,
        stabilized,
    })
}

/// How the semi-infinite geodesics near the origin are sampled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoalescenceMethod {
    /// [`stationary_coalescence_below`]: exact in law.
    #[default]
    Stationary,
    /// [`coalescence_below`]: geodesics to `(N, N)`, doubling `N` until
    /// the paths below the level stop changing.
    FiniteTarget,
}

/// Rectangle width used by [`stationary_coalescence_below`] when none is
/// given: the paths' horizontal position at height `level` fluctuates on the
/// exit-point scale `2^{5/3} level^{2/3}`, and the width leaves six of those
/// beyond the diagonal.
pub fn stationary_width(a: Point, b: Point, level: i64) -> i64 {
    let spread = 2f64.powf(5.0 / 3.0) * (level as f64).powf(2.0 / 3.0);
    level + 2 * a.x.max(b.x) + (6.0 * spread).ceil() as i64 + 64
}

/// Decides where the semi-infinite geodesics from `a` and `b` meet, if they
/// do so in a row below `level`, sampling the geodesic tree exactly.
///
/// In `R = [0, width) x [0, level)` the semi-infinite geodesics climb the
/// Busemann potential `V(x) = W(x) + max(V(x + e1), V(x + e2))`. Along the
/// down-right path formed by row `level` and column `width`, the increments
/// of `V` are i.i.d. Exp(1/2) and independent of the weights in `R`, so
/// drawing them fresh and sweeping `R` gives the tree in `R` with its exact
/// law, without a far target. The increments come from the field's seed
/// under their own salt.
///
/// `stabilized` is false when a path leaves `R` through the right column
/// before the question is settled; `n_used` is the width.
pub fn stationary_coalescence_below<S: WeightSource + ?Sized>(
    src: &S,
    a: Point,
    b: Point,
    level: i64,
    width: i64,
) -> Result<CensoredRecord> {
    let inside = |p: Point| p.x >= 0 && p.y >= 0 && p.x < width;
    if !(inside(a) && inside(b)) {
        return domain(format!("{a} and {b} must lie in [0, {width}) x [0, inf)"));
    }
    if level <= a.y.max(b.y) {
        return domain(format!("level {level} must exceed the start rows"));
    }
    let rect = Region::new(0, 0, width - 1, level - 1)?;
    if !src.covers(&rect) {
        return domain(format!("the weight source does not cover {rect:?}"));
    }
    let (w, h) = (width as usize, level as usize);
    let streams = KeyedStreams::new(src.master_seed(), "busemann-boundary");
    let mut top = streams.at(0, 0);
    let row_incr: Vec<f64> = (0..w).map(|_| exp_from_bits(BOUNDARY_RATE, top.next_u64())).collect();
    let mut side = streams.at(1, 0);
    let col_incr: Vec<f64> = (0..h).map(|_| exp_from_bits(BOUNDARY_RATE, side.next_u64())).collect();

    // up[x] = V(x, y + 1); the last entry is the right column.
    let mut up = vec![0.0f64; w + 1];
    for x in (0..w).rev() {
        up[x] = up[x + 1] + row_incr[x];
    }
    let mut right: BitVec<u64, Lsb0> = bitvec![u64, Lsb0; 0; w * h];
    let mut cur = vec![0.0f64; w + 1];
    let mut wrow = vec![0.0f64; w];
    for y in (0..h).rev() {
        src.fill_row(y as i64, 0, &mut wrow);
        cur[w] = up[w] + col_incr[y];
        for x in (0..w).rev() {
            let (r, u) = (cur[x + 1], up[x]);
            if r > u {
                right.set(y * w + x, true);
            }
            cur[x] = wrow[x] + r.max(u);
        }
        std::mem::swap(&mut up, &mut cur);
    }

    let record = |outcome, stabilized| CensoredRecord { outcome, n_used: width, stabilized };
    let (mut p, mut q) = (a, b);
    while p != q {
        let lead = if p.level() <= q.level() { &mut p } else { &mut q };
        let idx = lead.y as usize * w + lead.x as usize;
        *lead = *lead + if right[idx] { Point::E1 } else { Point::E2 };
        if lead.y >= level {
            return Ok(record(Censored::AtLeast(level), true));
        }
        if lead.x >= width {
            return Ok(record(Censored::AtLeast(level), false));
        }
    }
    Ok(record(Censored::Exact(p), true))
}

/// [`coalescence_below`] or [`stationary_coalescence_below`] (with
/// [`stationary_width`]), by `method`.
pub fn coalescence_event<S: WeightSource + ?Sized>(
    src: &S,
    a: Point,
    b: Point,
    level: i64,
    method: CoalescenceMethod,
    cfg: CoalescenceConfig,
) -> Result<CensoredRecord> {
    match method {
        CoalescenceMethod::Stationary => {
            stationary_coalescence_below(src, a, b, level, stationary_width(a, b, level))
        }
        CoalescenceMethod::FiniteTarget => coalescence_below(src, a, b, level, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SeededField;
    use crate::lpp::geodesic;

    #[test]
    fn semi_geodesic_endpoints() {
        let f = SeededField::interior(3);
        assert_eq!(semi_geodesic(&f, Point::new(7, 7), 7).unwrap().len(), 1);
        let g = semi_geodesic(&f, Point::new(2, 0), 40).unwrap();
        assert_eq!(g.start(), Point::new(2, 0));
        assert_eq!(g.end(), Point::new(40, 40));
        assert_eq!(
            g,
            geodesic(&f, Point::new(2, 0), Point::new(40, 40)).unwrap()
        );
    }

    #[test]
    fn equal_starts_coalesce_immediately() {
        let f = SeededField::interior(1);
        let a = Point::new(3, 5);
        let r = coalescence_point(&f, a, a, CoalescenceConfig { n0: 16, cap: 64 }).unwrap();
        assert_eq!(r.c, a);
        assert_eq!(r.t, 5);
        assert!(r.stabilized);
    }

    #[test]
    fn first_common_is_on_both_paths_and_minimal() {
        let f = SeededField::interior(11);
        let (a, b) = (Point::new(6, 0), Point::new(0, 6));
        let tree = tree_to(&f, Point::ORIGIN, 100).unwrap();
        let c = first_common(&tree, a, b);
        let pa: Vec<Point> = tree.trace(a).collect();
        let pb: Vec<Point> = tree.trace(b).collect();
        assert!(pa.contains(&c) && pb.contains(&c));
        let ia = pa.iter().position(|&p| p == c).unwrap();
        assert!(pa[..ia].iter().all(|p| !pb.contains(p)));
        assert_eq!(pa[ia..], pb[pb.iter().position(|&p| p == c).unwrap()..]);
    }

    #[test]
    fn coalescence_time_is_at_least_m() {
        for seed in 0..30 {
            let f = SeededField::interior(seed);
            let r = coalescence_time(&f, 4, CoalescenceConfig::for_m(4)).unwrap();
            assert!(r.t >= 4 && r.c.x >= 4, "{r:?}");
        }
    }

    #[test]
    fn censored_agrees_with_full_record() {
        for seed in 0..30 {
            let f = SeededField::interior(seed);
            let cfg = CoalescenceConfig::for_m(3);
            let full = coalescence_time(&f, 3, cfg).unwrap();
            let cut = coalescence_below(&f, Point::new(3, 0), Point::new(0, 3), 20, cfg).unwrap();
            if !(full.stabilized && cut.stabilized) {
                continue;
            }
            match cut.outcome {
                Censored::Exact(c) => assert_eq!(c, full.c),
                Censored::AtLeast(l) => assert!(full.t >= l),
            }
        }
    }

    #[test]
    fn stationary_sampler_basics() {
        let f = SeededField::interior(4);
        let a = Point::new(2, 3);
        let r = stationary_coalescence_below(&f, a, a, 10, 40).unwrap();
        assert_eq!(r.outcome, Censored::Exact(a));
        for seed in 0..40 {
            let f = SeededField::interior(seed);
            let (a, b) = (Point::new(4, 0), Point::new(0, 4));
            let r = stationary_coalescence_below(&f, a, b, 60, stationary_width(a, b, 60)).unwrap();
            assert!(r.stabilized);
            assert_eq!(r, stationary_coalescence_below(&f, a, b, 60, stationary_width(a, b, 60)).unwrap());
            if let Censored::Exact(c) = r.outcome {
                assert!(c.x >= 4 && c.y >= 4 && c.y < 60, "{c}");
            }
        }
    }

    #[test]
    fn stationary_sampler_flags_escapes() {
        // Starts outside the rectangle are rejected; in a two-column
        // rectangle some path leaves through the side before meeting.
        let f = SeededField::interior(1);
        assert!(stationary_coalescence_below(&f, Point::new(4, 0), Point::new(0, 4), 30, 4).is_err());
        let escaped = (0..50).any(|seed| {
            let f = SeededField::interior(seed);
            !stationary_coalescence_below(&f, Point::new(1, 0), Point::new(0, 1), 30, 2).unwrap().stabilized
        });
        assert!(escaped);
    }

    #[test]
    fn starts_must_lie_below_the_initial_scale() {
        let f = SeededField::interior(0);
        assert!(coalescence_time(&f, 8, CoalescenceConfig { n0: 8, cap: 64 }).is_err());
        assert!(coalescence_time(&f, 0, CoalescenceConfig::for_m(1)).is_err());
        assert!(coalescence_below(
            &f,
            Point::new(2, 0),
            Point::new(0, 2),
            2,
            CoalescenceConfig::for_m(2)
        )
        .is_err());
    }
}
