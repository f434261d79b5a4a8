//! The interacting mass system driven by last-passage times.
//!
//! Masses `W_i` sit on the sites of `Z`; the mass of `(a, b]` at time `n`
//! is `Lbar_M(b, n) - Lbar_M(a, n)` with
//! `Lbar_M(x, n) = max_{z <= x} { M(z) + L_z(x, n) }` and `M` the cumulative
//! mass, `M(z) - M(z - 1) = W_z`. The noise `W(x, k)`, `k >= 1`, is an
//! interior Exp(1) field. The maximum over `z` is truncated at `z >= lo - K`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::{SeededField, WeightSource};
use crate::error::{domain, resource, Result};
use crate::rng::{exp_from_bits, RngStream};

/// Masses on consecutive sites `start, start + 1, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassField {
    pub start: i64,
    pub masses: Vec<f64>,
    /// Rate of the i.i.d. exponential law the field was drawn from.
    pub rho: f64,
}

impl MassField {
    pub fn new(start: i64, masses: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return domain(format!("density parameter must lie in (0,1), got {rho}"));
        }
        if masses.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return domain("masses must be finite and nonnegative");
        }
        Ok(MassField { start, masses, rho })
    }

    /// i.i.d. Exp(`rho`) masses on `start..start + len`.
    pub fn iid_exp(start: i64, len: usize, rho: f64, seed: u64) -> Result<Self> {
        let mut rng = RngStream::new(seed, 0).rng();
        let masses = (0..len)
            .map(|_| exp_from_bits(rho, rng.next_u64()))
            .collect();
        MassField::new(start, masses, rho)
    }

    /// Last site carrying a mass.
    pub fn end(&self) -> i64 {
        self.start + self.masses.len() as i64 - 1
    }

    pub fn get(&self, site: i64) -> Option<f64> {
        if site < self.start {
            return None;
        }
        self.masses.get((site - self.start) as usize).copied()
    }

    /// `M(a, b]`.
    pub fn interval(&self, a: i64, b: i64) -> Option<f64> {
        if a > b || a + 1 < self.start || b > self.end() {
            return None;
        }
        Some(
            (a + 1..=b)
                .map(|i| self.masses[(i - self.start) as usize])
                .sum(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassEvolution {
    /// Time-`n` masses on the sites `a + 1..=b` of the requested window.
    pub field: MassField,
    /// Truncation depth `K` finally used.
    pub depth: i64,
    /// Number of times the depth was doubled.
    pub retries: u32,
}

/// Evolves `initial` for `n` steps and returns the masses on the sites of
/// `(a, b]`. The truncation depth starts at `8n` and doubles while some
/// maximizer sits on the truncation boundary; the initial field must cover
/// every depth tried.
pub fn evolve_mass(
    initial: &MassField,
    n: usize,
    window: (i64, i64),
    noise_seed: u64,
) -> Result<MassEvolution> {
    let (a, b) = window;
    if a >= b {
        return domain(format!("empty window ({a}, {b}]"));
    }
    if a + 1 < initial.start || b > initial.end() {
        return domain(format!(
            "window ({a}, {b}] is not covered by the initial field"
        ));
    }
    if n == 0 {
        let masses = initial.masses
            [(a + 1 - initial.start) as usize..=(b - initial.start) as usize]
            .to_vec();
        return Ok(MassEvolution {
            field: MassField {
                start: a + 1,
                masses,
                rho: initial.rho,
            },
            depth: 0,
            retries: 0,
        });
    }
    let noise = SeededField::interior(noise_seed);
    let mut depth = 8 * n as i64;
    let mut retries = 0;
    loop {
        let z_min = a - depth;
        if z_min < initial.start {
            return resource(format!(
                "truncation depth {depth} reaches below the initial field (start {})",
                initial.start
            ));
        }
        if let Some(masses) = sweep_masses(initial, &noise, n, z_min, a, b) {
            return Ok(MassEvolution {
                field: MassField {
                    start: a + 1,
                    masses,
                    rho: initial.rho,
                },
                depth,
                retries,
            });
        }
        depth *= 2;
        retries += 1;
    }
}

/// One truncated evolution; `None` if a window maximizer is `z_min`.
fn sweep_masses(
    initial: &MassField,
    noise: &SeededField,
    n: usize,
    z_min: i64,
    a: i64,
    b: i64,
) -> Option<Vec<f64>> {
    let w = (b - z_min + 1) as usize;
    let mut f = vec![0.0f64; w];
    let off = (z_min - initial.start) as usize;
    for i in 1..w {
        f[i] = f[i - 1] + initial.masses[off + i];
    }
    let mut label: Vec<i64> = (z_min..=b).collect();
    let mut wrow = vec![0.0f64; w];
    for k in 1..=n as i64 {
        noise.fill_row(k, z_min, &mut wrow);
        f[0] += wrow[0];
        for i in 1..w {
            let left = f[i - 1];
            if left > f[i] {
                f[i] = left + wrow[i];
                label[i] = label[i - 1];
            } else {
                f[i] += wrow[i];
            }
        }
    }
    let lo = (a - z_min) as usize;
    if label[lo..].iter().any(|&z| z == z_min) {
        return None;
    }
    Some(f[lo..].windows(2).map(|p| p[1] - p[0]).collect())
}
