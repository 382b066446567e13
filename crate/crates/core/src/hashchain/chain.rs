use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{digest_block, Block, RecordError, Seal};
use crate::digest::Digest256;
use crate::hashcash::{meets_target, Difficulty};
use crate::types::JobId;

/// A block together with the digest recorded for it when it was appended.
/// Keeping the recorded digest lets validation pinpoint a block whose bytes
/// changed after the fact, not only the successor whose link broke.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub digest: Digest256,
    pub block: Block,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("block does not extend the tip {tip}")]
    WrongParent { tip: Digest256 },
    #[error("expected height {expected}, got {got}")]
    WrongHeight { expected: u64, got: u64 },
    #[error("transaction {0} already on chain")]
    DuplicateTransaction(u64),
    #[error("block rejected: {0}")]
    Invalid(FailureKind),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    DigestMismatch,
    WrongParent,
    WrongHeight { expected: u64, got: u64 },
    GenesisParentNotZero,
    DuplicateTransaction { id: u64 },
    DuplicateJob { job_id: JobId },
    InvalidPovmRecord { job_id: JobId, reason: String },
    InsufficientWork,
    BadLotteryProof { reason: String },
    ProducerMismatch,
    Undecodable { reason: String },
}

impl std::fmt::Display for FailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureKind::DigestMismatch => {
                write!(f, "block digest does not match the recorded digest")
            }
            FailureKind::WrongParent => {
                write!(f, "prev_digest does not link to the previous block")
            }
            FailureKind::WrongHeight { expected, got } => {
                write!(f, "height {got}, expected {expected}")
            }
            FailureKind::GenesisParentNotZero => write!(f, "genesis prev_digest is not zero"),
            FailureKind::DuplicateTransaction { id } => write!(f, "duplicate transaction {id}"),
            FailureKind::DuplicateJob { job_id } => {
                write!(f, "records for job {job_id} appear in more than one block")
            }
            FailureKind::InvalidPovmRecord { job_id, reason } => {
                write!(f, "invalid record for job {job_id}: {reason}")
            }
            FailureKind::InsufficientWork => write!(f, "nonce does not meet the difficulty target"),
            FailureKind::BadLotteryProof { reason } => write!(f, "bad lottery proof: {reason}"),
            FailureKind::ProducerMismatch => write!(f, "producer is not the lottery winner"),
            FailureKind::Undecodable { reason } => write!(f, "undecodable block: {reason}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub index: usize,
    pub kind: FailureKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub blocks_checked: usize,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_failure(&self) -> Option<&ValidationFailure> {
        self.failures.iter().min_by_key(|f| f.index)
    }

    pub fn first_invalid_index(&self) -> Option<usize> {
        self.first_failure().map(|f| f.index)
    }
}

/// Checks that depend only on the block itself.
fn block_failures(
    block: &Block,
    digest: &Digest256,
    difficulty: Difficulty,
    is_genesis: bool,
) -> Vec<FailureKind> {
    let mut out = Vec::new();
    for r in &block.povm_records {
        if let Err(e) = r.check() {
            out.push(FailureKind::InvalidPovmRecord {
                job_id: r.job_id,
                reason: record_reason(&e),
            });
        }
    }
    match &block.seal {
        Seal::Nonce(_) => {
            if !is_genesis && !meets_target(digest, difficulty) {
                out.push(FailureKind::InsufficientWork);
            }
        }
        Seal::Lottery(p) => {
            if let Err(e) = p.verify() {
                out.push(FailureKind::BadLotteryProof {
                    reason: e.to_string(),
                });
            } else if p.winner != block.producer {
                out.push(FailureKind::ProducerMismatch);
            }
        }
    }
    out
}

fn record_reason(e: &RecordError) -> String {
    e.to_string()
}

#[derive(Clone, Debug, Default)]
struct SeenIds {
    txs: BTreeSet<u64>,
    jobs: BTreeMap<JobId, usize>,
}

impl SeenIds {
    /// Failures for ids already seen, then records the block's ids.
    fn admit(&mut self, index: usize, block: &Block) -> Vec<FailureKind> {
        let mut out = Vec::new();
        for tx in &block.transactions {
            if !self.txs.insert(tx.id) {
                out.push(FailureKind::DuplicateTransaction { id: tx.id });
            }
        }
        let jobs: BTreeSet<JobId> = block.povm_records.iter().map(|r| r.job_id).collect();
        for job_id in jobs {
            if *self.jobs.entry(job_id).or_insert(index) != index {
                out.push(FailureKind::DuplicateJob { job_id });
            }
        }
        out
    }
}

/// Streaming validator: feed frames in height order. Cloning it snapshots
/// the state after a prefix, so a suffix can be re-checked without
/// replaying the blocks before it.
#[derive(Clone, Debug)]
pub struct ChainValidator {
    difficulty: Difficulty,
    index: usize,
    prev: Option<Digest256>,
    seen: SeenIds,
}

impl ChainValidator {
    pub fn new(difficulty: Difficulty) -> Self {
        ChainValidator {
            difficulty,
            index: 0,
            prev: None,
            seen: SeenIds::default(),
        }
    }

    /// Height the next frame is expected at.
    pub fn next_index(&self) -> usize {
        self.index
    }

    /// Checks one frame: the digest recorded for it and its block, or the
    /// reason the block bytes failed to decode.
    pub fn push(&mut self, stored: Digest256, block: Result<&Block, String>) -> Vec<FailureKind> {
        let index = self.index;
        self.index += 1;
        let prev = self.prev.replace(stored);
        let block = match block {
            Ok(b) => b,
            Err(reason) => return vec![FailureKind::Undecodable { reason }],
        };
        let mut out = Vec::new();
        let digest = digest_block(block);
        if digest != stored {
            out.push(FailureKind::DigestMismatch);
        }
        match prev {
            None if block.prev_digest != Digest256::ZERO => {
                out.push(FailureKind::GenesisParentNotZero)
            }
            Some(p) if block.prev_digest != p => out.push(FailureKind::WrongParent),
            _ => {}
        }
        if block.height != index as u64 {
            out.push(FailureKind::WrongHeight {
                expected: index as u64,
                got: block.height,
            });
        }
        out.extend(self.seen.admit(index, block));
        out.extend(block_failures(block, &digest, self.difficulty, index == 0));
        out
    }
}

/// Validates a sequence of recorded digests and (possibly undecodable) blocks.
pub(crate) fn validate_frames<'a>(
    difficulty: Difficulty,
    frames: impl IntoIterator<Item = (Digest256, Result<&'a Block, String>)>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut v = ChainValidator::new(difficulty);
    for (stored, block) in frames {
        let index = v.next_index();
        report.blocks_checked += 1;
        report.failures.extend(
            v.push(stored, block)
                .into_iter()
                .map(|kind| ValidationFailure { index, kind }),
        );
    }
    report
}

/// Re-derives every digest link, height, id-uniqueness rule, record quorum
/// invariant, and seal.
pub fn validate_chain(chain: &Chain) -> ValidationReport {
    validate_frames(
        chain.difficulty,
        chain.entries.iter().map(|e| (e.digest, Ok(&e.block))),
    )
}

/// Append-only chain rooted at a genesis block. The difficulty applies to
/// nonce-sealed blocks; lottery-sealed blocks carry their own proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub difficulty: Difficulty,
    entries: Vec<ChainEntry>,
    #[serde(skip)]
    tx_ids: BTreeSet<u64>,
    #[serde(skip)]
    job_ids: BTreeSet<JobId>,
}

impl Default for Chain {
    fn default() -> Self {
        Chain::new(Difficulty(0))
    }
}

impl Chain {
    pub fn new(difficulty: Difficulty) -> Chain {
        let genesis = Block::genesis();
        Chain {
            difficulty,
            entries: vec![ChainEntry {
                digest: digest_block(&genesis),
                block: genesis,
            }],
            tx_ids: BTreeSet::new(),
            job_ids: BTreeSet::new(),
        }
    }

    /// Builds a chain from stored entries without checking them, as when
    /// loading a file that is about to be validated.
    pub fn from_entries_unchecked(difficulty: Difficulty, entries: Vec<ChainEntry>) -> Chain {
        let mut chain = Chain {
            difficulty,
            entries,
            tx_ids: BTreeSet::new(),
            job_ids: BTreeSet::new(),
        };
        chain.reindex();
        chain
    }

    fn reindex(&mut self) {
        self.tx_ids = self
            .blocks()
            .flat_map(|b| b.transactions.iter().map(|t| t.id))
            .collect();
        self.job_ids = self
            .blocks()
            .flat_map(|b| b.povm_records.iter().map(|r| r.job_id))
            .collect();
    }

    pub fn entries(&self) -> &[ChainEntry] {
        &self.entries
    }

    pub fn blocks(&self) -> impl DoubleEndedIterator<Item = &Block> + ExactSizeIterator {
        self.entries.iter().map(|e| &e.block)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tip(&self) -> &ChainEntry {
        self.entries.last().expect("chain always holds genesis")
    }

    pub fn height(&self) -> u64 {
        self.tip().block.height
    }

    pub fn get(&self, index: usize) -> Option<&ChainEntry> {
        self.entries.get(index)
    }

    pub fn contains_transaction(&self, id: u64) -> bool {
        self.tx_ids.contains(&id)
    }

    pub fn contains_job(&self, job_id: JobId) -> bool {
        self.job_ids.contains(&job_id)
    }

    /// Checks that `block` could be appended, and returns its digest.
    pub fn check_append(&self, block: &Block) -> Result<Digest256, ChainError> {
        let tip = self.tip();
        if block.prev_digest != tip.digest {
            return Err(ChainError::WrongParent { tip: tip.digest });
        }
        let expected = tip.block.height + 1;
        if block.height != expected {
            return Err(ChainError::WrongHeight {
                expected,
                got: block.height,
            });
        }
        let mut ids = BTreeSet::new();
        for tx in &block.transactions {
            if self.tx_ids.contains(&tx.id) || !ids.insert(tx.id) {
                return Err(ChainError::DuplicateTransaction(tx.id));
            }
        }
        if let Some(r) = block
            .povm_records
            .iter()
            .find(|r| self.job_ids.contains(&r.job_id))
        {
            return Err(ChainError::Invalid(FailureKind::DuplicateJob {
                job_id: r.job_id,
            }));
        }
        let digest = digest_block(block);
        if let Some(kind) = block_failures(block, &digest, self.difficulty, false)
            .into_iter()
            .next()
        {
            return Err(ChainError::Invalid(kind));
        }
        Ok(digest)
    }

    pub fn append_block(&mut self, block: Block) -> Result<Digest256, ChainError> {
        let digest = self.check_append(&block)?;
        self.tx_ids.extend(block.transactions.iter().map(|t| t.id));
        self.job_ids
            .extend(block.povm_records.iter().map(|r| r.job_id));
        self.entries.push(ChainEntry { digest, block });
        Ok(digest)
    }

    /// Drops every block above `height` (used when reorganising onto a fork).
    pub fn truncate(&mut self, height: u64) {
        self.entries.truncate(height as usize + 1);
        self.reindex();
    }

    /// Mutable access to a stored block that leaves its recorded digest
    /// untouched, for tamper experiments.
    pub fn block_mut(&mut self, index: usize) -> Option<&mut Block> {
        self.entries.get_mut(index).map(|e| &mut e.block)
    }
}
