//! Baseline hashcash proof of work: find a nonce `N` such that
//! `h(B || N)` starts with a prescribed number of zero bits, i.e. falls below
//! the threshold `T = 2^(256 - bits)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::digest::Digest256;

/// Required count of leading zero bits in the block digest.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Difficulty(pub u8);

impl Difficulty {
    pub fn leading_zero_bits(self) -> u32 {
        self.0 as u32
    }

    /// `log2` of the equivalent threshold `T`.
    pub fn threshold_log2(self) -> u32 {
        256 - self.leading_zero_bits()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HashcashError {
    #[error("no valid nonce within {attempts} attempts")]
    Exhausted { attempts: u64 },
    #[error("max_attempts must be at least 1")]
    NoAttempts,
    #[error("difficulty {0} out of range for this helper (max 62)")]
    OutOfRange(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningOutcome {
    pub nonce: u64,
    pub digest: Digest256,
    pub attempts: u64,
}

/// Running count of digest evaluations; one evaluation is one hash-op.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashMeter {
    pub hash_ops: u64,
}

/// True iff `digest < 2^(256 - bits)` read big-endian.
pub fn meets_target(digest: &Digest256, d: Difficulty) -> bool {
    digest.leading_zero_bits() >= d.leading_zero_bits()
}

/// Nonces are appended to the block bytes little-endian.
pub fn nonce_bytes(nonce: u64) -> [u8; 8] {
    nonce.to_le_bytes()
}

pub fn pow_digest(block_bytes: &[u8], nonce: u64) -> Digest256 {
    Digest256::of_parts([block_bytes, &nonce_bytes(nonce)[..]])
}

pub fn verify(block_bytes: &[u8], nonce: u64, d: Difficulty) -> bool {
    meets_target(&pow_digest(block_bytes, nonce), d)
}

/// Scans nonces `nonce_start, nonce_start + 1, ...` (wrapping) for the first
/// one meeting `d`. Every attempt, successful or not, is charged to `meter`.
pub fn mine(
    block_bytes: &[u8],
    d: Difficulty,
    nonce_start: u64,
    max_attempts: u64,
    meter: &mut HashMeter,
) -> Result<MiningOutcome, HashcashError> {
    if max_attempts == 0 {
        return Err(HashcashError::NoAttempts);
    }
    let mut prefix = Sha256::new();
    prefix.update(block_bytes);
    let mut nonce = nonce_start;
    for attempt in 1..=max_attempts {
        let mut h = prefix.clone();
        h.update(nonce_bytes(nonce));
        let digest = Digest256(h.finalize().into());
        meter.hash_ops += 1;
        if meets_target(&digest, d) {
            return Ok(MiningOutcome {
                nonce,
                digest,
                attempts: attempt,
            });
        }
        nonce = nonce.wrapping_add(1);
    }
    Err(HashcashError::Exhausted {
        attempts: max_attempts,
    })
}

/// Mean attempts to success, `2^bits`.
pub fn expected_attempts(d: Difficulty) -> Result<u64, HashcashError> {
    if d.0 > 62 {
        return Err(HashcashError::OutOfRange(d.0));
    }
    Ok(1u64 << d.0)
}
