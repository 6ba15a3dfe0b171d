//! Counter-based deterministic noise streams.
//!
//! Every draw site is addressed by the tuple `(seed, kind, node, step)`.
//! The tuple is written verbatim into a ChaCha8 key, so distinct tuples
//! yield independent streams by construction: adding nodes, extending the
//! horizon, or reordering draws never perturbs any other stream. Bitwise
//! determinism is promised within one build of this crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain separator for the substream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    /// Process noise `v_n` (node field unused, kept 0).
    ProcessNoise = 1,
    /// Per-node observation noise `w_{l,n}`.
    ObservationNoise = 2,
    /// Initial true state draw.
    InitialState = 3,
    /// Initial stacked-error draw for Monte-Carlo bias runs.
    InitialError = 4,
    /// Per-run seed derivation for Monte-Carlo batches.
    RunSeed = 5,
    /// Random-graph construction attempts.
    Topology = 6,
    /// Ad-hoc draws in tests and experiment setup.
    Auxiliary = 7,
}

/// Deterministic substream addressed by `(seed, kind, node, step)`.
pub fn substream(seed: u64, kind: StreamKind, node: u64, step: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(kind as u64).to_le_bytes());
    key[16..24].copy_from_slice(&node.to_le_bytes());
    key[24..32].copy_from_slice(&step.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derives an independent 64-bit seed for run `run` of a Monte-Carlo
/// batch rooted at `seed`.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    use rand::RngCore;
    substream(seed, StreamKind::RunSeed, run, 0).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let a1: Vec<u64> = (0..4)
            .map(|_| substream(7, StreamKind::ProcessNoise, 0, 3).next_u64())
            .collect();
        let a2 = substream(7, StreamKind::ProcessNoise, 0, 3).next_u64();
        assert_eq!(a1[0], a2);
        let b = substream(7, StreamKind::ProcessNoise, 0, 4).next_u64();
        let c = substream(7, StreamKind::ObservationNoise, 0, 3).next_u64();
        assert_ne!(a2, b);
        assert_ne!(a2, c);
    }
}
