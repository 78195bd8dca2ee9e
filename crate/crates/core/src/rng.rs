//! Seeding conventions.
//!
//! All randomness flows through `ChaCha8Rng` seeded with
//! `seed_from_u64`. Replica streams are derived from a master seed with
//! SplitMix64 so that the stream of replica `k` never depends on how many
//! replicas run or on which thread they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in output metadata.
pub const RNG_ID: &str = "chacha8(rand_chacha-0.9,seed_from_u64)+splitmix64-replica";

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replica `index` of an experiment with master seed `master`.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replica_seeds_are_distinct() {
        let mut seeds: alloc::vec::Vec<u64> = (0..1000).map(|k| replica_seed(7, k)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(replica_seed(7, 0), replica_seed(8, 0));
    }
}
