//! Seeded, hierarchically derived random streams.
//!
//! A [`Stream`] is a 64-bit key. Child streams are derived from
//! `(key, purpose-label, index)` so that any component can reproduce the
//! exact randomness another component saw, without sharing generator state.
//! Generators are ChaCha8, which is counter based.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed out by [`Stream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stream {
    key: u64,
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl Stream {
    pub const fn new(seed: u64) -> Self {
        Stream {
            key: splitmix64(seed),
        }
    }

    pub const fn key(&self) -> u64 {
        self.key
    }

    /// Derive an independent child stream.
    pub fn child(&self, label: &str, index: u64) -> Stream {
        let a = splitmix64(self.key ^ fnv1a(label));
        Stream {
            key: splitmix64(a ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut s = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
