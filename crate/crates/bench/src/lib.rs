//! Shared inputs for the benchmarks: fixed-seed μ-random states on FH-1.

use billiard_core::experiment::{sample_state, trial_rng};
use billiard_core::fixtures::fh1;
use billiard_core::{BilliardTable, JointState, ParticleState};

pub const SEED: u64 = 0xB111;

pub fn table() -> BilliardTable {
    fh1()
}

/// `n` independent μ-distributed states; equal for equal `n`.
pub fn states(table: &BilliardTable, n: usize) -> Vec<ParticleState> {
    (0..n as u64)
        .map(|i| sample_state(table, &mut trial_rng(SEED, i)).expect("FH-1 has free area"))
        .collect()
}

/// `n` independent pairs at speed ratio `lambda`.
pub fn joints(table: &BilliardTable, n: usize, lambda: f64) -> Vec<JointState> {
    let s = states(table, 2 * n);
    s.chunks_exact(2).map(|p| JointState::new(p[0], p[1], lambda).expect("valid speed ratio")).collect()
}
