use serde::{Deserialize, Serialize};

/// Inputs of the PoVM-versus-PoW cost comparison
/// `tau = (k * clone_cost + coordination) - pow_cost * pow_miners`.
///
/// All quantities share one integer cost unit so `tau` is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostModel {
    /// Clones per job.
    pub k: u64,
    /// Cost of running one clone of a job (worst case: all k run to the end).
    pub clone_cost: u64,
    /// Coordination overhead of redundant execution.
    pub coordination: u64,
    /// Cost of one hashcash attempt.
    pub pow_cost: u64,
    /// Miners hashing in the proof-of-work network.
    pub pow_miners: u64,
}

/// Negative values mean redundant PoVM is cheaper than the PoW it replaces.
/// Exact as long as each product fits in `i128` (one factor below `2^63`).
pub fn tau(m: &CostModel) -> i128 {
    (m.k as i128 * m.clone_cost as i128 + m.coordination as i128)
        - m.pow_cost as i128 * m.pow_miners as i128
}
