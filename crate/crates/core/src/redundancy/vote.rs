use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::reputation::CloneOutcome;
use super::{check_k, quorum, RedundancyError};
use crate::digest::Digest256;
use crate::hashchain::{PovmRecord, RecordVerdict};
use crate::jobvm::ExecutionTrace;
use crate::types::{JobId, NodeId, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Set iff some output gathered at least `(k+1)/2` votes.
    pub accepted_output: Option<Word>,
    /// Votes behind the accepted output, or behind the most popular one.
    pub votes_for: usize,
    pub votes_total: usize,
    pub dissenting_miners: BTreeSet<NodeId>,
    pub checkpoint_divergence_index: Option<usize>,
}

/// Majority vote over clone outputs.
pub fn majority_vote(results: &[(NodeId, Word)]) -> Result<Verdict, RedundancyError> {
    let ballots: Vec<_> = results.iter().map(|&(m, o)| (m, Some(o))).collect();
    tally(&ballots)
}

/// Like [`majority_vote`], but a clone may cast a blank ballot (`None`)
/// when it produced no answer. Blank ballots never win.
pub fn tally(ballots: &[(NodeId, Option<Word>)]) -> Result<Verdict, RedundancyError> {
    if ballots.is_empty() {
        return Err(RedundancyError::Empty);
    }
    check_k(ballots.len())?;
    let mut counts: BTreeMap<Word, usize> = BTreeMap::new();
    for &(_, b) in ballots {
        if let Some(o) = b {
            *counts.entry(o).or_default() += 1;
        }
    }
    let best = counts
        .iter()
        .max_by_key(|&(_, &c)| c)
        .map(|(&o, &c)| (o, c));
    let votes_for = best.map_or(0, |(_, c)| c);
    let accepted_output = best
        .filter(|&(_, c)| c >= quorum(ballots.len()))
        .map(|(o, _)| o);
    let dissenting_miners = match accepted_output {
        Some(o) => ballots
            .iter()
            .filter(|&&(_, b)| b != Some(o))
            .map(|&(m, _)| m)
            .collect(),
        None => BTreeSet::new(),
    };
    Ok(Verdict {
        accepted_output,
        votes_for,
        votes_total: ballots.len(),
        dissenting_miners,
        checkpoint_divergence_index: None,
    })
}

/// Earliest checkpoint index at which any two traces differ. A trace that
/// ends early diverges at its length.
pub fn compare_checkpoints(traces: &[&ExecutionTrace]) -> Result<Option<usize>, RedundancyError> {
    if traces.len() < 2 {
        return Err(RedundancyError::TooFewTraces(traces.len()));
    }
    let longest = traces
        .iter()
        .map(|t| t.checkpoints.len())
        .max()
        .unwrap_or(0);
    for i in 0..longest {
        let first = traces[0].checkpoints.get(i).map(|c| c.digest);
        if traces
            .iter()
            .any(|t| t.checkpoints.get(i).map(|c| c.digest) != first)
        {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

fn ballot(trace: &ExecutionTrace) -> Option<Word> {
    trace.output.filter(|_| trace.status.is_completed())
}

/// Votes on clone traces and cross-checks their checkpoints.
///
/// A clone whose answer matches the accepted output but whose checkpoint
/// sequence differs from the majority sequence is listed as dissenting; the
/// output itself still stands.
pub fn judge(results: &[(NodeId, &ExecutionTrace)]) -> Result<Verdict, RedundancyError> {
    let ballots: Vec<_> = results.iter().map(|&(m, t)| (m, ballot(t))).collect();
    let mut verdict = tally(&ballots)?;
    if results.len() >= 2 {
        let traces: Vec<_> = results.iter().map(|&(_, t)| t).collect();
        verdict.checkpoint_divergence_index = compare_checkpoints(&traces)?;
    }
    if let (Some(accepted), Some(_)) =
        (verdict.accepted_output, verdict.checkpoint_divergence_index)
    {
        let roots: Vec<_> = results
            .iter()
            .map(|&(m, t)| (m, t.checkpoint_root()))
            .collect();
        if let Some(majority_root) = majority_key(roots.iter().map(|&(_, r)| r), results.len()) {
            for (&(m, t), &(_, root)) in results.iter().zip(&roots) {
                if ballot(t) == Some(accepted) && root != majority_root {
                    verdict.dissenting_miners.insert(m);
                }
            }
        }
    }
    Ok(verdict)
}

fn majority_key<K: Ord + Copy>(keys: impl Iterator<Item = K>, k: usize) -> Option<K> {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    for key in keys {
        *counts.entry(key).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|&(_, c)| c >= quorum(k))
        .map(|(key, _)| key)
}

/// Digest of a clone's answer; all-zero for a blank ballot.
pub fn result_digest(output: Option<Word>) -> Digest256 {
    output.map_or(Digest256::ZERO, |o| Digest256::of(&o.to_le_bytes()))
}

/// One evidence record per clone. A record is accepted iff its own answer
/// reached quorum and its run stayed within the SLA.
pub fn povm_records(job_id: JobId, results: &[(NodeId, &ExecutionTrace)]) -> Vec<PovmRecord> {
    let k = results.len();
    let ballots: Vec<_> = results.iter().map(|&(_, t)| ballot(t)).collect();
    results
        .iter()
        .zip(&ballots)
        .map(|(&(miner, trace), &b)| {
            let votes_for = b.map_or(0, |o| ballots.iter().filter(|&&x| x == Some(o)).count());
            let sla_ok = !trace.status.is_sla_breach();
            let verdict = if votes_for >= quorum(k) && sla_ok {
                RecordVerdict::Accepted
            } else {
                RecordVerdict::Rejected
            };
            PovmRecord {
                job_id,
                miner,
                result_digest: result_digest(b),
                checkpoint_root: trace.checkpoint_root(),
                verdict,
                votes_for: votes_for as u32,
                votes_total: k as u32,
                sla_ok,
            }
        })
        .collect()
}

/// Reputation consequences of one job's records, in record order.
///
/// SLA breaches always count against the miner. When no record was
/// accepted nobody can be blamed for the split and other clones are left
/// alone. Otherwise rejected clones dissented, and accepted clones whose
/// checkpoint root differs from the majority root dissented too.
pub fn record_outcomes(records: &[PovmRecord]) -> Vec<(NodeId, Option<CloneOutcome>)> {
    let any_accepted = records.iter().any(|r| r.verdict == RecordVerdict::Accepted);
    let majority_root = majority_key(records.iter().map(|r| r.checkpoint_root), records.len());
    records
        .iter()
        .map(|r| {
            let outcome = if !r.sla_ok {
                Some(CloneOutcome::SlaViolated)
            } else if !any_accepted {
                None
            } else if r.verdict == RecordVerdict::Rejected
                || majority_root.is_some_and(|root| root != r.checkpoint_root)
            {
                Some(CloneOutcome::Dissented)
            } else {
                Some(CloneOutcome::Agreed)
            };
            (r.miner, outcome)
        })
        .collect()
}
