//! Totally asymmetric simple exclusion on a finite segment, particle and
//! hole labels, and interchange times.
//!
//! The segment `[-K, K]` has closed ends. Every particle carries a rate-1
//! clock; the simulation runs them as one clock of rate `P` (the particle
//! count) that picks a particle uniformly, which has the same law.
//!
//! Two ways to root the labels at a `(0,1)` jump: [`TasepState::init_palm`]
//! samples the process seen from a typical such jump (stationary
//! configuration with `0` occupied and `1` empty just before, past run by
//! the reversed dynamics), and [`TasepState::run_until_reference_jump`]
//! waits for the first such jump after a burn-in.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, Result};
use crate::rng::{exp_from_bits, unit_open, RngStream};

/// Tracked labels must stay this far from the segment ends.
pub const EDGE_BUFFER: i64 = 8;

#[derive(Clone, Debug)]
pub struct TasepState {
    k: i64,
    occupied: Vec<bool>,
    /// Positions of the particles, in no particular order.
    particles: Vec<i64>,
    time: f64,
    rng: ChaCha8Rng,
    /// Per-site label of the particle or hole there, once rooted.
    labels: Option<Vec<i64>>,
    /// Jumps `(time, from)` since initialization, until rooting.
    log: Vec<(f64, i64)>,
    /// Absolute time of the reference jump.
    reference_time: f64,
    /// Occupation and labels right after the reference jump.
    rooted: Vec<bool>,
    rooted_labels: Vec<i64>,
}

impl TasepState {
    /// Product Bernoulli(1/2) configuration on `[-K, K]` at time 0.
    pub fn init_stationary(k: i64, seed: u64) -> Result<Self> {
        if k < 64 {
            return domain(format!("half-width must be at least 64, got {k}"));
        }
        let mut rng = RngStream::new(seed, 1).rng();
        let occupied: Vec<bool> = (0..2 * k + 1).map(|_| rng.next_u64() >> 63 == 1).collect();
        let particles = (-k..=k).filter(|&s| occupied[(s + k) as usize]).collect();
        Ok(TasepState {
            k,
            occupied,
            particles,
            time: 0.0,
            rng,
            labels: None,
            log: Vec::new(),
            reference_time: 0.0,
            rooted: Vec::new(),
            rooted_labels: Vec::new(),
        })
    }

    pub fn half_width(&self) -> i64 {
        self.k
    }

    /// Time since the reference jump (or since initialization, before it).
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn reference_time(&self) -> f64 {
        self.reference_time
    }

    pub fn occupied(&self, site: i64) -> bool {
        self.occupied[(site + self.k) as usize]
    }

    pub fn occupation(&self) -> &[bool] {
        &self.occupied
    }

    /// Fraction of occupied sites in `[lo, hi]`.
    pub fn density(&self, lo: i64, hi: i64) -> f64 {
        let count = (lo..=hi).filter(|&s| self.occupied(s)).count();
        count as f64 / (hi - lo + 1) as f64
    }

    pub fn is_rooted(&self) -> bool {
        self.labels.is_some()
    }

    /// `(label, position)` of every particle, by increasing label.
    pub fn particle_labels(&self) -> Vec<(i64, i64)> {
        self.labelled(true)
    }

    /// `(label, position)` of every hole, by increasing label.
    pub fn hole_labels(&self) -> Vec<(i64, i64)> {
        self.labelled(false)
    }

    fn labelled(&self, particle: bool) -> Vec<(i64, i64)> {
        let Some(labels) = &self.labels else {
            return Vec::new();
        };
        let mut v: Vec<(i64, i64)> = (-self.k..=self.k)
            .filter(|&s| self.occupied(s) == particle)
            .map(|s| (labels[(s + self.k) as usize], s))
            .collect();
        v.sort_unstable();
        v
    }

    /// Particle positions decrease with label, hole positions increase.
    pub fn order_preserved(&self) -> bool {
        let p = self.particle_labels();
        let h = self.hole_labels();
        p.windows(2)
            .all(|w| w[0].0 + 1 == w[1].0 && w[0].1 > w[1].1)
            && h.windows(2)
                .all(|w| w[0].0 + 1 == w[1].0 && w[0].1 < w[1].1)
    }

    /// Advances to the next clock ring; returns the site a particle jumped
    /// from, if the ring produced a jump.
    fn step(&mut self) -> Option<i64> {
        let n = self.particles.len();
        if n == 0 {
            self.time = f64::INFINITY;
            return None;
        }
        self.time += exp_from_bits(n as f64, self.rng.next_u64());
        let idx = ((unit_open(self.rng.next_u64()) * n as f64) as usize).min(n - 1);
        let from = self.particles[idx];
        if from == self.k || self.occupied(from + 1) {
            return None;
        }
        let i = (from + self.k) as usize;
        self.occupied.swap(i, i + 1);
        if let Some(labels) = &mut self.labels {
            labels.swap(i, i + 1);
        }
        self.particles[idx] = from + 1;
        Some(from)
    }

    /// Runs unrooted dynamics up to absolute time `t`.
    pub fn run_until(&mut self, t: f64) {
        while self.time < t {
            if let Some(from) = self.step() {
                self.log.push((self.time, from));
            }
        }
    }

    /// Runs for `burn_in`, then until the first jump across the bond
    /// `(0, 1)`, and makes that jump the time origin: the particle at site 1
    /// gets label 0 (labels grow leftwards) and the hole at site 0 gets
    /// label 0 (labels grow rightwards).
    pub fn run_until_reference_jump(&mut self, burn_in: f64, horizon: f64) -> Result<()> {
        if self.is_rooted() {
            return domain("the state is already rooted");
        }
        self.run_until(burn_in);
        loop {
            if self.time > burn_in + horizon {
                return resource(format!("no jump across (0, 1) within {horizon} time units"));
            }
            if let Some(from) = self.step() {
                self.log.push((self.time, from));
                if from == 0 && self.time >= burn_in {
                    break;
                }
            }
        }
        // The reference jump itself stays in the log as its last entry.
        self.reference_time = self.time;
        self.root();
        Ok(())
    }

    /// Exact Palm version at density 1/2: the configuration just before the
    /// reference jump is product Bernoulli conditioned on a particle at 0
    /// and a hole at 1; the jump happens at time 0. The past up to time
    /// `-past` is generated by the reversed process (left jumps), which
    /// is the time reversal of TASEP under the product measure.
    pub fn init_palm(k: i64, seed: u64, past: f64) -> Result<Self> {
        let mut s = TasepState::init_stationary(k, seed)?;
        if !(past >= 0.0) {
            return domain("the past horizon must be nonnegative");
        }
        let (i0, i1) = (k as usize, k as usize + 1);
        s.occupied[i0] = true;
        s.occupied[i1] = false;
        // Reversed dynamics from the pre-jump configuration; each left jump
        // from j + 1 to j at reversed time u is a forward jump from j at -u.
        let mut occ = s.occupied.clone();
        let mut parts: Vec<i64> = (-k..=k).filter(|&x| occ[(x + k) as usize]).collect();
        let mut back = Vec::new();
        let mut u = 0.0;
        let n = parts.len();
        if n > 0 {
            loop {
                u += exp_from_bits(n as f64, s.rng.next_u64());
                if u > past {
                    break;
                }
                let idx = ((unit_open(s.rng.next_u64()) * n as f64) as usize).min(n - 1);
                let from = parts[idx];
                if from == -k || occ[(from - 1 + k) as usize] {
                    continue;
                }
                occ.swap((from - 1 + k) as usize, (from + k) as usize);
                parts[idx] = from - 1;
                back.push((-u, from - 1));
            }
        }
        back.reverse();
        s.log = back;
        s.log.push((0.0, 0));
        s.occupied.swap(i0, i1);
        s.particles = (-k..=k).filter(|&x| s.occupied[(x + k) as usize]).collect();
        s.reference_time = 0.0;
        s.time = 0.0;
        s.root();
        Ok(s)
    }

    /// Labels the current configuration (particle 0 at site 1, hole 0 at
    /// site 0) and resets the clock to 0.
    fn root(&mut self) {
        let mut labels = vec![0i64; self.occupied.len()];
        let mut next = 0;
        for s in (-self.k..=1).rev() {
            if self.occupied(s) {
                labels[(s + self.k) as usize] = next;
                next += 1;
            }
        }
        let mut next = -1;
        for s in 2..=self.k {
            if self.occupied(s) {
                labels[(s + self.k) as usize] = next;
                next -= 1;
            }
        }
        let mut next = 0;
        for s in 0..=self.k {
            if !self.occupied(s) {
                labels[(s + self.k) as usize] = next;
                next += 1;
            }
        }
        let mut next = -1;
        for s in (-self.k..0).rev() {
            if !self.occupied(s) {
                labels[(s + self.k) as usize] = next;
                next -= 1;
            }
        }
        self.rooted_labels = labels.clone();
        self.labels = Some(labels);
        self.rooted = self.occupied.clone();
        self.time = 0.0;
    }
}

/// Interchange times `G(i, j)` for `|i| <= i_max`, `|j| <= j_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterchangeTable {
    pub i_max: i64,
    pub j_max: i64,
    /// Row-major over `i`, then `j`; `None` when not observed.
    pub values: Vec<Option<f64>>,
    /// Absolute simulation time of the reference jump.
    pub reference_time: f64,
    /// Whether every tracked label stayed clear of the segment ends.
    pub valid: bool,
}

impl InterchangeTable {
    fn new(i_max: i64, j_max: i64, reference_time: f64) -> Self {
        let len = ((2 * i_max + 1) * (2 * j_max + 1)) as usize;
        InterchangeTable {
            i_max,
            j_max,
            values: vec![None; len],
            reference_time,
            valid: true,
        }
    }

    fn slot(&self, i: i64, j: i64) -> Option<usize> {
        if i.abs() > self.i_max || j.abs() > self.j_max {
            return None;
        }
        Some(((i + self.i_max) * (2 * self.j_max + 1) + (j + self.j_max)) as usize)
    }

    /// `G(hole i, particle j)`, if observed.
    pub fn get(&self, i: i64, j: i64) -> Option<f64> {
        self.slot(i, j).and_then(|s| self.values[s])
    }

    fn set(&mut self, i: i64, j: i64, t: f64) {
        if let Some(s) = self.slot(i, j) {
            self.values[s] = Some(t);
        }
    }

    fn future_complete(&self) -> bool {
        (0..=self.i_max).all(|i| (0..=self.j_max).all(|j| self.get(i, j).is_some()))
    }
}

/// Continues a rooted state until every `G(i, j)` with `0 <= i <= i_max`,
/// `0 <= j <= j_max` is observed or `horizon` is reached, and recovers the
/// tracked past interchanges by undoing the logged jumps.
pub fn interchange_times(
    state: &mut TasepState,
    i_max: i64,
    j_max: i64,
    horizon: f64,
) -> Result<InterchangeTable> {
    if !state.is_rooted() {
        return domain("interchange times need a rooted state");
    }
    if i_max < 0 || j_max < 0 {
        return domain("label bounds must be nonnegative");
    }
    let k = state.k;
    let mut table = InterchangeTable::new(i_max, j_max, state.reference_time);
    table.set(0, 0, 0.0);
    while !table.future_complete() && state.time < horizon {
        if let Some(from) = state.step() {
            let l = state.labels.as_ref().expect("rooted");
            // After the jump the particle is at from + 1, the hole at from.
            let (hole, particle) = (l[(from + k) as usize], l[(from + 1 + k) as usize]);
            table.set(hole, particle, state.time);
        }
    }
    let edge_ok = |occ: &[bool], lab: &[i64]| -> bool {
        (-k..=k).all(|s| {
            let i = (s + k) as usize;
            let tracked = if occ[i] {
                lab[i].abs() <= j_max
            } else {
                lab[i].abs() <= i_max
            };
            !tracked || (s >= -k + EDGE_BUFFER && s <= k - EDGE_BUFFER)
        })
    };
    let mut valid = edge_ok(&state.occupied, state.labels.as_ref().expect("rooted"));
    // Undo the logged jumps, newest first; undoing the reference jump
    // records G(0, 0) = 0 again.
    let mut occ = state.rooted.clone();
    let mut lab = state.rooted_labels.clone();
    for &(t, from) in state.log.iter().rev() {
        let i = (from + k) as usize;
        // Before undoing: particle at from + 1, hole at from.
        table.set(lab[i], lab[i + 1], t - state.reference_time);
        occ.swap(i, i + 1);
        lab.swap(i, i + 1);
    }
    valid &= edge_ok(&occ, &lab);
    table.valid = valid;
    Ok(table)
}
