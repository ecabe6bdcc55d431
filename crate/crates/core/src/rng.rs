//! Deterministic substream derivation.
//!
//! Every randomized task derives its generator from a [`Stream`] key: 64 bits
//! of state obtained by mixing the experiment seed with a path of labels
//! (trial index, functional id, replicate index, ...). Equal keys give equal
//! generators and distinct paths decorrelate through the SplitMix64
//! finalizer, so results do not depend on scheduling or worker count as long
//! as the label paths are fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Bijective, so distinct inputs stay distinct.
#[inline]
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A counter-style RNG substream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream(u64);

impl Stream {
    pub fn root(seed: u64) -> Self {
        Stream(mix64(seed ^ 0x706F_6C79_6C61_6221))
    }

    /// Derive a child stream for a numeric label.
    #[must_use]
    pub fn child(self, label: u64) -> Self {
        Stream(mix64(self.0 ^ mix64(label.wrapping_add(GOLDEN_GAMMA))))
    }

    /// Derive a child stream for a name, e.g. a functional identifier.
    #[must_use]
    pub fn child_named(self, name: &str) -> Self {
        // FNV-1a fold of the name, then the usual mixing step.
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for b in name.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        self.child(h)
    }

    /// Stable identifier recorded as provenance in estimates and CSV rows.
    pub fn id(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
