//! Measure-preservation checks shared by the dynamics and acceptance suites.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use billiard_core::experiment::{sample_state, trial_rng};
use billiard_core::flow::{wrap_angle, Orbit};
use billiard_core::stats::chi_square;
use billiard_core::*;
use rand::Rng;

/// 10×10 position cells times 8 direction cells.
const GRID: usize = 10;
const DIRS: usize = 8;

/// Position cells that touch a scatterer; these are dropped from μ tests.
fn blocked_cells(table: &BilliardTable) -> Vec<bool> {
    let h = 1.0 / GRID as f64;
    let mut out = vec![false; GRID * GRID];
    for i in 0..GRID {
        for j in 0..GRID {
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            // distance from the circle center to the closest point of the cell, on the torus
            let gap = |lo: f64, c: f64| {
                (0..3)
                    .map(|o| {
                        let c = c + o as f64 - 1.0;
                        (lo - c).max(c - lo - h).max(0.0)
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            out[i * GRID + j] = table
                .scatterers()
                .iter()
                .any(|s| gap(x0, s.center.x).hypot(gap(y0, s.center.y)) <= s.radius);
        }
    }
    out
}

/// χ² of time-`t` images of μ-samples against uniform occupancy of the
/// unblocked cells. Returns `(statistic, p-value)`.
pub fn liouville_chi_square(table: &BilliardTable, samples: usize, t: f64, seed: u64) -> (f64, f64) {
    let blocked = blocked_cells(table);
    let mut counts = vec![0u64; GRID * GRID * DIRS];
    let mut rng = trial_rng(seed, 0);
    for _ in 0..samples {
        let s = sample_state(table, &mut rng).unwrap();
        let f = flow(&s, t, table).unwrap();
        let i = ((f.position.x * GRID as f64) as usize).min(GRID - 1);
        let j = ((f.position.y * GRID as f64) as usize).min(GRID - 1);
        let k = ((wrap_angle(f.angle) / TAU * DIRS as f64) as usize).min(DIRS - 1);
        counts[(i * GRID + j) * DIRS + k] += 1;
    }
    let kept: Vec<u64> = (0..counts.len()).filter(|c| !blocked[c / DIRS]).map(|c| counts[c]).collect();
    let total: u64 = kept.iter().sum();
    let expected = vec![total as f64 / kept.len() as f64; kept.len()];
    chi_square(&kept, &expected).unwrap()
}

/// χ² of one-collision images of ν-samples on a 10×8 grid in
/// (arc, incidence angle), against ν's cell masses.
pub fn boundary_chi_square(table: &BilliardTable, samples: usize, seed: u64) -> (f64, f64) {
    let total_len = table.boundary_length();
    let (nr, nphi) = (10usize, 8usize);
    let mut counts = vec![0u64; nr * nphi];
    let mut rng = trial_rng(seed, 0);
    for _ in 0..samples {
        // ν has density ∝ cos φ: sin φ is uniform on [−1, 1]
        let b = BoundaryState {
            arc_coordinate: rng.random::<f64>() * total_len,
            incidence_angle: (2.0 * rng.random::<f64>() - 1.0).asin(),
        };
        let f = billiard_map(&b, table).unwrap();
        let r = f.arc_coordinate.rem_euclid(total_len);
        let i = ((r / total_len * nr as f64) as usize).min(nr - 1);
        let j = (((f.incidence_angle + FRAC_PI_2) / PI * nphi as f64) as usize).min(nphi - 1);
        counts[i * nphi + j] += 1;
    }
    let mut expected = Vec::new();
    for _ in 0..nr {
        for j in 0..nphi {
            let a = -FRAC_PI_2 + PI * j as f64 / nphi as f64;
            let b = a + PI / nphi as f64;
            expected.push(samples as f64 / nr as f64 * (b.sin() - a.sin()) / 2.0);
        }
    }
    chi_square(&counts, &expected).unwrap()
}

/// Mean wall-to-wall flight over `orbits × per_orbit` collisions. The
/// collision map preserves ν, so long orbits from μ-random starts sample it.
pub fn mean_flight(table: &BilliardTable, orbits: usize, per_orbit: usize, seed: u64) -> f64 {
    let mut rng = trial_rng(seed, 0);
    let mut total = 0.0;
    for _ in 0..orbits {
        let mut orbit = Orbit::new(table, sample_state(table, &mut rng).unwrap());
        // the first flight starts mid-air
        orbit.next_flight().unwrap();
        for _ in 0..per_orbit {
            total += orbit.next_flight().unwrap().0.duration;
        }
    }
    total / (orbits * per_orbit) as f64
}
