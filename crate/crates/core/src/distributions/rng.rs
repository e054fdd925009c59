use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator behind every [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// A reproducible random stream identified by `(seed, stream id)`.
///
/// The seed keys a ChaCha8 generator and the stream id selects one of its
/// 2^64 independent keystreams, so distinct ids never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Stream `index` inside a namespace private to `self`.
    ///
    /// The child seed is a SplitMix64 hash of `(seed, stream)`, so children of
    /// different parents use different ChaCha keys.
    pub fn child(&self, index: u64) -> Self {
        let key = splitmix64(self.seed ^ splitmix64(self.stream ^ 0xA076_1D64_78BD_642F));
        Self {
            seed: key,
            stream: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
