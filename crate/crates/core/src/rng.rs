//! Splittable random streams.
//!
//! Every genealogy node owns a stream key derived from its parent's key and
//! its slot (first or second child), so the draws made for a node depend only
//! on the root seed and the node's path from the root. Traversal order and
//! pruning of unrelated subtrees cannot perturb them.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key of the root particle of a replica.
#[inline]
pub fn root_key(seed: u64) -> u64 {
    mix64(seed ^ 0x5EED_0F_B8B3_u64.wrapping_mul(GOLDEN))
}

/// Stream key of child `slot` (0 or 1) of the node keyed `parent`.
#[inline]
pub fn child_key(parent: u64, slot: u8) -> u64 {
    mix64(parent.wrapping_add(GOLDEN.wrapping_mul(slot as u64 + 1)) ^ 0xA5A5_A5A5_0000_0000)
}

/// Generator for the draws of one node.
#[inline]
pub fn node_rng(key: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(key)
}

/// Seed of replica `replica_index` at grid point `t_index` of an experiment.
///
/// Bit-exact definition: `mix64(mix64(mix64(root ^ C1) ^ (t_index + 1) * C2) ^ (replica_index + 1) * C3)`
/// with `C1 = 0x243F6A8885A308D3`, `C2 = 0x9E3779B97F4A7C15`, `C3 = 0xD1B54A32D192ED03`,
/// multiplications wrapping.
pub fn replica_seed(root_seed: u64, t_index: u64, replica_index: u64) -> u64 {
    let a = mix64(root_seed ^ 0x243F_6A88_85A3_08D3);
    let b = mix64(a ^ (t_index + 1).wrapping_mul(GOLDEN));
    mix64(b ^ (replica_index + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}
