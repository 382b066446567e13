//! k-vote traditional redundancy: each job is cloned onto `k` distinct miners
//! (k odd), outputs are put to a majority vote needing `(k+1)/2` agreeing
//! ballots, and checkpoint sequences are compared to catch clones that reach
//! the right answer by the wrong route.

mod cost;
mod reputation;
mod vote;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::jobvm::{Job, SplitMix64};
use crate::types::{JobId, NodeId};

pub use cost::{tau, CostModel};
pub use reputation::{update_reputation, CloneOutcome, Reputation, ReputationLedger};
pub use vote::{
    compare_checkpoints, judge, majority_vote, povm_records, record_outcomes, result_digest, tally,
    Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RedundancyError {
    #[error("k must be odd and at least 1, got {0}")]
    EvenK(usize),
    #[error("no results to vote on")]
    Empty,
    #[error("need {needed} eligible miners, only {available} available")]
    InsufficientMiners { needed: usize, available: usize },
    #[error("checkpoint comparison needs at least 2 traces, got {0}")]
    TooFewTraces(usize),
}

/// Votes needed to accept an output among `k` ballots.
pub fn quorum(k: usize) -> usize {
    k.div_ceil(2)
}

pub(crate) fn check_k(k: usize) -> Result<(), RedundancyError> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(RedundancyError::EvenK(k));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneAssignment {
    pub job_id: JobId,
    pub miners: Vec<NodeId>,
    pub k: usize,
}

/// Picks `k` distinct miners for `job` using `rng`; never the job's customer.
///
/// Candidates are taken in ascending id order and drawn by a partial
/// Fisher-Yates shuffle, so the choice is a pure function of the inputs.
pub fn assign_clones(
    job: &Job,
    available_miners: &BTreeSet<NodeId>,
    k: usize,
    rng: &mut SplitMix64,
) -> Result<CloneAssignment, RedundancyError> {
    check_k(k)?;
    let mut pool: Vec<NodeId> = available_miners
        .iter()
        .copied()
        .filter(|&m| m != job.customer)
        .collect();
    if pool.len() < k {
        return Err(RedundancyError::InsufficientMiners {
            needed: k,
            available: pool.len(),
        });
    }
    for i in 0..k {
        let j = i + rng.below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    Ok(CloneAssignment {
        job_id: job.id,
        miners: pool,
        k,
    })
}
