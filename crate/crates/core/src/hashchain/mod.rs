//! Digest-linked blocks, chain validation, and fork resolution.
//!
//! A block's digest is SHA-256 over its canonical encoding. The seal (nonce
//! or lottery proof) is encoded last, so in hashcash mode the digest is
//! exactly `h(B || N)` with `B` the encoding up to and including the seal tag.

mod chain;
mod file;
mod fork;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};
use crate::digest::Digest256;
use crate::lottery::LotteryProof;
use crate::redundancy::quorum;
use crate::types::{JobId, NodeId, Tick};

pub use chain::{
    validate_chain, Chain, ChainEntry, ChainError, ChainValidator, FailureKind, ValidationFailure,
    ValidationReport,
};
pub use file::{
    dump_chain_bin, dump_chain_json, load_chain_bin, load_chain_json, verify_chain_file,
    ChainFileError, CHAIN_MAGIC,
};
pub use fork::{resolve_fork, ForkError, ForkResolution, ForkSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    pub payer: NodeId,
    pub payee: NodeId,
    pub amount: u64,
    pub timestamp: Tick,
}

/// Pending transactions ordered by `(timestamp, id)`.
#[derive(Clone, Debug, Default)]
pub struct Mempool {
    pending: Vec<Transaction>,
    ids: BTreeSet<u64>,
}

impl Mempool {
    /// Returns false (and keeps the pool unchanged) for a duplicate id.
    pub fn insert(&mut self, tx: Transaction) -> bool {
        if !self.ids.insert(tx.id) {
            return false;
        }
        let at = self
            .pending
            .partition_point(|p| (p.timestamp, p.id) < (tx.timestamp, tx.id));
        self.pending.insert(at, tx);
        true
    }

    pub fn remove(&mut self, id: u64) -> Option<Transaction> {
        if !self.ids.remove(&id) {
            return None;
        }
        let at = self.pending.iter().position(|t| t.id == id)?;
        Some(self.pending.remove(at))
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.contains(&id)
    }

    pub fn pending(&self) -> &[Transaction] {
        &self.pending
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecordVerdict {
    Rejected,
    Accepted,
}

/// Evidence that `miner` ran one clone of job `job_id`, and how the vote went.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PovmRecord {
    pub job_id: JobId,
    pub miner: NodeId,
    pub result_digest: Digest256,
    pub checkpoint_root: Digest256,
    pub verdict: RecordVerdict,
    pub votes_for: u32,
    pub votes_total: u32,
    pub sla_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("votes_total {0} is not odd")]
    EvenTotal(u32),
    #[error("votes_for {votes_for} exceeds votes_total {votes_total}")]
    TooManyVotes { votes_for: u32, votes_total: u32 },
    #[error("verdict {recorded:?} contradicts the vote counts")]
    VerdictMismatch { recorded: RecordVerdict },
}

impl PovmRecord {
    pub fn check(&self) -> Result<(), RecordError> {
        if self.votes_total.is_multiple_of(2) {
            return Err(RecordError::EvenTotal(self.votes_total));
        }
        if self.votes_for > self.votes_total {
            return Err(RecordError::TooManyVotes {
                votes_for: self.votes_for,
                votes_total: self.votes_total,
            });
        }
        let accepted = self.votes_for as usize >= quorum(self.votes_total as usize) && self.sla_ok;
        let expected = if accepted {
            RecordVerdict::Accepted
        } else {
            RecordVerdict::Rejected
        };
        if expected != self.verdict {
            return Err(RecordError::VerdictMismatch {
                recorded: self.verdict,
            });
        }
        Ok(())
    }
}

/// Nonce in hashcash mode, the lottery transcript in PoVM mode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seal {
    Nonce(u64),
    Lottery(LotteryProof),
}

impl Seal {
    const NONCE_TAG: u8 = 0;
    const LOTTERY_TAG: u8 = 1;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub prev_digest: Digest256,
    pub timestamp: Tick,
    pub producer: NodeId,
    pub transactions: Vec<Transaction>,
    pub povm_records: Vec<PovmRecord>,
    pub seal: Seal,
}

impl Block {
    pub fn genesis() -> Block {
        Block {
            height: 0,
            prev_digest: Digest256::ZERO,
            timestamp: 0,
            producer: NodeId::SYSTEM,
            transactions: Vec::new(),
            povm_records: Vec::new(),
            seal: Seal::Nonce(0),
        }
    }

    fn encode_body(&self, e: &mut Encoder) {
        e.u64(self.height)
            .digest(&self.prev_digest)
            .u64(self.timestamp)
            .node(self.producer);
        e.seq(&self.transactions).seq(&self.povm_records);
    }

    /// Bytes hashed together with a nonce when mining: everything except the
    /// nonce itself.
    pub fn pow_preimage(&self) -> Vec<u8> {
        let mut e = Encoder::default();
        self.encode_body(&mut e);
        e.u8(Seal::NONCE_TAG);
        e.into_bytes()
    }

    pub fn nonce(&self) -> Option<u64> {
        match self.seal {
            Seal::Nonce(n) => Some(n),
            Seal::Lottery(_) => None,
        }
    }

    pub fn lottery_proof(&self) -> Option<&LotteryProof> {
        match &self.seal {
            Seal::Lottery(p) => Some(p),
            Seal::Nonce(_) => None,
        }
    }
}

pub fn digest_block(block: &Block) -> Digest256 {
    Digest256::of(&block.to_bytes())
}

impl Encode for Transaction {
    fn encode(&self, e: &mut Encoder) {
        e.u64(self.id)
            .node(self.payer)
            .node(self.payee)
            .u64(self.amount)
            .u64(self.timestamp);
    }
}

impl Decode for Transaction {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Transaction {
            id: d.u64()?,
            payer: d.node()?,
            payee: d.node()?,
            amount: d.u64()?,
            timestamp: d.u64()?,
        })
    }
}

impl Encode for PovmRecord {
    fn encode(&self, e: &mut Encoder) {
        e.u64(self.job_id)
            .node(self.miner)
            .digest(&self.result_digest)
            .digest(&self.checkpoint_root);
        e.u8(self.verdict as u8)
            .u32(self.votes_for)
            .u32(self.votes_total)
            .bool(self.sla_ok);
    }
}

impl Decode for PovmRecord {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let job_id = d.u64()?;
        let miner = d.node()?;
        let result_digest = d.digest()?;
        let checkpoint_root = d.digest()?;
        let offset = d.offset();
        let verdict = match d.u8()? {
            0 => RecordVerdict::Rejected,
            1 => RecordVerdict::Accepted,
            tag => {
                return Err(DecodeError::BadTag {
                    what: "verdict",
                    tag,
                    offset,
                })
            }
        };
        Ok(PovmRecord {
            job_id,
            miner,
            result_digest,
            checkpoint_root,
            verdict,
            votes_for: d.u32()?,
            votes_total: d.u32()?,
            sla_ok: d.bool()?,
        })
    }
}

impl Encode for Block {
    fn encode(&self, e: &mut Encoder) {
        self.encode_body(e);
        match &self.seal {
            Seal::Nonce(n) => {
                e.u8(Seal::NONCE_TAG).u64(*n);
            }
            Seal::Lottery(p) => {
                e.u8(Seal::LOTTERY_TAG);
                p.encode(e);
            }
        }
    }
}

impl Decode for Block {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let height = d.u64()?;
        let prev_digest = d.digest()?;
        let timestamp = d.u64()?;
        let producer = d.node()?;
        let transactions = d.seq(32)?;
        let povm_records = d.seq(86)?;
        let offset = d.offset();
        let seal = match d.u8()? {
            Seal::NONCE_TAG => Seal::Nonce(d.u64()?),
            Seal::LOTTERY_TAG => Seal::Lottery(LotteryProof::decode(d)?),
            tag => {
                return Err(DecodeError::BadTag {
                    what: "seal",
                    tag,
                    offset,
                })
            }
        };
        Ok(Block {
            height,
            prev_digest,
            timestamp,
            producer,
            transactions,
            povm_records,
            seal,
        })
    }
}
