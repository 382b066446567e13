use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hashchain::{Block, Transaction};
use crate::jobvm::{Checkpoint, ExecStatus, Job};
use crate::lottery::{Commitment, Reveal};
use crate::types::{JobId, NodeId, Tick, Word};

/// One clone's answer, without its checkpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneResult {
    pub job_id: JobId,
    pub attempt: u32,
    pub miner: NodeId,
    pub output: Option<Word>,
    pub status: ExecStatus,
    pub instructions_executed: u64,
    pub peak_memory_cells: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timer {
    SubmitJob { index: u64 },
    CloneDone { job_id: JobId, attempt: u32 },
    RoundStart { round: u64 },
    RevealPhase { round: u64 },
    Draw { round: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    JobSubmit {
        job: Box<Job>,
        submit_tick: Tick,
    },
    JobAssign {
        job: Box<Job>,
        attempt: u32,
    },
    JobResult(CloneResult),
    CheckpointBatch {
        job_id: JobId,
        attempt: u32,
        miner: NodeId,
        checkpoints: Vec<Checkpoint>,
    },
    Commit {
        round: u64,
        commitment: Commitment,
    },
    Reveal {
        round: u64,
        reveal: Reveal,
    },
    BlockAnnounce(Box<Block>),
    TxSubmit(Transaction),
    /// Local wake-up; always addressed to the sender.
    Timer(Timer),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::JobSubmit { .. } => "job_submit",
            Payload::JobAssign { .. } => "job_assign",
            Payload::JobResult(_) => "job_result",
            Payload::CheckpointBatch { .. } => "checkpoint_batch",
            Payload::Commit { .. } => "commit",
            Payload::Reveal { .. } => "reveal",
            Payload::BlockAnnounce(_) => "block_announce",
            Payload::TxSubmit(_) => "tx_submit",
            Payload::Timer(_) => "timer",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub deliver_at: Tick,
    pub seq: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub payload: Payload,
}

/// Pending events in `(deliver_at, seq)` order. `seq` is assigned on push
/// and never reused.
#[derive(Debug, Default)]
pub struct EventQueue {
    events: BTreeMap<(Tick, u64), SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, deliver_at: Tick, from: NodeId, to: NodeId, payload: Payload) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.insert(
            (deliver_at, seq),
            SimEvent {
                deliver_at,
                seq,
                from,
                to,
                payload,
            },
        );
        seq
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.events.pop_first().map(|(_, e)| e)
    }

    pub fn peek_time(&self) -> Option<Tick> {
        self.events.keys().next().map(|&(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
