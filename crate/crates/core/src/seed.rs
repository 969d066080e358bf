//! Deterministic stream addressing.
//!
//! Every random decision in the crate is drawn from a generator seeded by a
//! [`StreamKey`], which is derived from the master seed by hashing a path of
//! labels (replica index, tree address, ...). Two computations that walk the
//! same path see the same numbers, independent of traversal order or thread
//! scheduling.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for all per-node and per-replica streams.
pub type StreamRng = Xoshiro256PlusPlus;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashed address of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

// Domain tags keep unrelated consumers of one master seed apart.
pub(crate) const DOMAIN_FIND: u64 = 0x46_49_4e_44;
pub(crate) const DOMAIN_CASCADE: u64 = 0x43_41_53_43;
pub(crate) const DOMAIN_REPLICA: u64 = 0x52_45_50_4c;
pub(crate) const DOMAIN_AUX: u64 = 0x41_55_58_00;

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        StreamKey(mix64(seed ^ 0x9e37_79b9_7f4a_7c15))
    }

    /// Key of the child stream labelled `label`.
    #[inline]
    pub fn child(self, label: u64) -> Self {
        StreamKey(mix64(
            self.0.rotate_left(17) ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019),
        ))
    }

    /// Stream of replica `index` under this key.
    pub fn replica(self, index: u64) -> Self {
        self.child(DOMAIN_REPLICA).child(index)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }
}

/// Seed of replica `index` under `master`, as a plain `u64`.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    StreamKey::root(master).replica(index).value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_stream() {
        let a = StreamKey::root(7).child(0).child(1);
        let b = StreamKey::root(7).child(0).child(1);
        assert_eq!(a, b);
        assert_eq!(a.rng().random::<u64>(), b.rng().random::<u64>());
    }

    #[test]
    fn sibling_paths_differ() {
        let k = StreamKey::root(7);
        assert_ne!(k.child(0), k.child(1));
        assert_ne!(k.child(0).child(1), k.child(1).child(0));
        assert_ne!(StreamKey::root(7), StreamKey::root(8));
    }
}
