use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::digest::Digest256;
use crate::hashchain::{Chain, RecordVerdict};
use crate::lottery::TicketTable;
use crate::types::{JobId, NodeId, Tick};

use super::config::Mode;
use super::energy::{EnergyCounters, EnergyReport};
use super::node::{NodeCounters, Role};
use super::tree::TreeStats;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobCounts {
    pub submitted: u64,
    pub accepted: u64,
    pub rejected: u64,
    /// Jobs that needed a second round of clones (informational; each is
    /// also counted as accepted, rejected, or pending).
    pub requeued: u64,
    /// Submitted but not yet settled on chain.
    pub pending: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub id: NodeId,
    pub role: Role,
    pub tip_height: u64,
    pub tip_digest: Digest256,
    pub counters: NodeCounters,
    pub tree: TreeStats,
    pub reputation: f64,
    pub blocks_produced: u64,
}

/// One row of `metrics.csv`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub tick: Tick,
    pub blocks: u64,
    pub jobs_accepted: u64,
    pub jobs_rejected: u64,
    pub vm_instructions: u64,
    pub hash_ops: u64,
    pub tickets_issued: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: Mode,
    pub seed: u64,
    pub final_tick: Tick,
    pub chain_height: u64,
    pub tip_digest: Digest256,
    pub jobs: JobCounts,
    pub nodes: Vec<NodeReport>,
    /// Earned ticket tables in force on the canonical chain, one per window.
    pub ticket_tables: Vec<TicketTable>,
    pub tickets_issued: u64,
    pub bootstrap_blocks: u64,
    pub blocks_per_producer: BTreeMap<NodeId, u64>,
    pub forks_observed: u64,
    pub reorgs: u64,
    pub stale_blocks: u64,
    pub rejected_blocks: u64,
    /// Height up to which every node's canonical chain is identical.
    pub agreed_height: u64,
    pub counters: EnergyCounters,
    pub energy: EnergyReport,
    #[serde(skip)]
    pub chain: Chain,
    #[serde(skip)]
    pub metrics: Vec<MetricsRow>,
}

/// Jobs settled on `chain`: accepted iff some record was accepted.
pub fn settled_jobs(chain: &Chain) -> BTreeMap<JobId, bool> {
    let mut out: BTreeMap<JobId, bool> = BTreeMap::new();
    for r in chain.blocks().flat_map(|b| &b.povm_records) {
        *out.entry(r.job_id).or_default() |= r.verdict == RecordVerdict::Accepted;
    }
    out
}

/// Distinct earned (non-bootstrap) ticket tables carried by `chain`, in
/// chain order.
pub fn ticket_tables(chain: &Chain) -> Vec<TicketTable> {
    let mut out: Vec<TicketTable> = Vec::new();
    for p in chain.blocks().filter_map(|b| b.lottery_proof()) {
        if !p.bootstrap && out.last().is_none_or(|t| t.window != p.tickets.window) {
            out.push(p.tickets.clone());
        }
    }
    out
}

impl SimReport {
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from(
            "tick,blocks,jobs_accepted,jobs_rejected,vm_instructions,hash_ops,tickets_issued\n",
        );
        for r in &self.metrics {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.tick,
                r.blocks,
                r.jobs_accepted,
                r.jobs_rejected,
                r.vm_instructions,
                r.hash_ops,
                r.tickets_issued
            ));
        }
        s
    }
}
