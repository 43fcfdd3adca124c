//! Reproducible randomness.
//!
//! Every random quantity in the crate is drawn from a [`Seed`], a
//! `(master, stream)` pair. The generator is ChaCha8 as implemented by
//! `rand_chacha` 0.9: the 256-bit key is the little-endian bytes of
//! `master` followed by 24 zero bytes, and `stream` selects the ChaCha
//! stream (nonce). The ChaCha keystream is specified independently of the
//! host, so a given seed yields the same bits on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Master seed used when the caller does not supply one.
pub const DEFAULT_MASTER: u64 = 0x484f_4c4f_474e_2d31;

/// A position in the seed space: master key plus substream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Stream 0 of the given master key.
    pub const fn from_master(master: u64) -> Self {
        Self { master, stream: 0 }
    }

    /// Same master, explicit stream index. Used for the per-neuron
    /// initialization vectors, where stream `j` belongs to neuron `j`.
    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            master: self.master,
            stream,
        }
    }

    /// Derives a child seed for a tagged sub-task. Children of distinct
    /// tags (or of distinct parents) land on unrelated streams.
    pub fn child(self, tag: u64) -> Self {
        Self {
            master: self.master,
            stream: mix64(self.stream ^ mix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    /// Convenience for nested derivations, e.g. `(phase, letter, bits, trial)`.
    pub fn derive(self, path: &[u64]) -> Self {
        path.iter().fold(self, |s, &t| s.child(t))
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

impl Default for Seed {
    fn default() -> Self {
        Self::from_master(DEFAULT_MASTER)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
