use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 state. A plain value: copying it forks an identical stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrngState(pub u64);

/// One SplitMix64 step.
pub fn prng_next(s: PrngState) -> (u64, PrngState) {
    let state = s.0.wrapping_add(GOLDEN_GAMMA);
    (mix(state), PrngState(state))
}

/// Derives an independent seed from a root seed and a path of labels.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(root.wrapping_add(GOLDEN_GAMMA)), |acc, &x| {
            mix(acc ^ mix(x.wrapping_add(GOLDEN_GAMMA)))
        })
}

/// Mutable convenience wrapper around [`PrngState`].
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: PrngState,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: PrngState(seed),
        }
    }

    pub fn state(&self) -> PrngState {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        let (out, next) = prng_next(self.state);
        self.state = next;
        out
    }

    /// Uniform value in `0..bound` (`bound > 0`), without modulo bias.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// Uniform value in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }

    /// A child generator whose stream is independent of the parent's.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(mix(self.next_u64()))
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}
