//! Seeded random streams.
//!
//! Every Monte Carlo consumer draws from a [`Stream`], a ChaCha8 generator
//! whose 64-bit seed is derived from a root seed and a path of integer tags:
//!
//! ```text
//! state = splitmix64(root)
//! for tag in path: state = splitmix64(state ^ splitmix64(tag))
//! ```
//!
//! Two streams with the same root and path are bitwise identical, so work
//! keyed by `(seed, block index)` can be scheduled on any number of threads
//! without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Tag constants used to separate the purposes a seed is put to.
pub mod tags {
    pub const INTERLEAVER: u64 = 0x696e_7465_726c_6576;
    pub const BLOCKS: u64 = 0x626c_6f63_6b73_0000;
    pub const INIT: u64 = 0x696e_6974_0000_0000;
    pub const STEP: u64 = 0x7374_6570_0000_0000;
    pub const GL: u64 = 0x676c_0000_0000_0000;
    pub const EVAL: u64 = 0x6576_616c_0000_0000;
}

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of the stream at `path` below `root`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |state, &tag| splitmix64(state ^ splitmix64(tag)))
}

pub fn stream(root: u64, path: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_stream() {
        let a: Vec<u64> = (0..8).map(|_| 0).scan(stream(7, &[1, 2]), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(stream(7, &[1, 2]), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn paths_are_order_sensitive() {
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }
}
