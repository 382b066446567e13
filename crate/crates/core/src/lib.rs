//! Proof-of-VM blockchain: a hashcash-free chain whose block producers are
//! drawn by a commit-reveal lottery, with tickets earned by running metered,
//! checkpointed customer jobs that are cross-checked by k-vote redundancy.
//!
//! The crate is organised bottom-up:
//!
//! - [`digest`] and [`codec`]: SHA-256 fingerprints and the canonical byte layout.
//! - [`hashchain`]: blocks, chain validation, fork resolution, chain files.
//! - [`hashcash`]: the baseline proof-of-work miner used for comparison.
//! - [`jobvm`]: the instruction-metered stack VM that runs customer jobs.
//! - [`redundancy`]: clone assignment, voting, checkpoint comparison, reputation, cost model.
//! - [`lottery`]: commit-reveal randomness and ticket-weighted producer draws.
//! - [`simnet`]: the deterministic discrete-event network tying it all together.

pub mod codec;
pub mod digest;
pub mod hashcash;
pub mod hashchain;
pub mod jobvm;
pub mod lottery;
pub mod redundancy;
pub mod simnet;

mod types;

pub use digest::Digest256;
pub use types::{JobId, NodeId, Tick, Word};
