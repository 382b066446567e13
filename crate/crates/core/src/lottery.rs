//! Commit-reveal lottery choosing each block's producer.
//!
//! Every miner commits to `h(seed || salt)`, later reveals `(seed, salt)`,
//! and all reveals are hashed together in ascending miner-id order. The
//! combined digest, reduced modulo the ticket total, lands in one miner's
//! cumulative ticket interval. Any single honest, unpredictable seed makes
//! the result unpredictable to everyone else. Modulo bias is below 2^-190
//! for any realistic ticket total and is left uncorrected.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};
use crate::digest::{hex_array, Digest256};
use crate::hashchain::{PovmRecord, RecordVerdict};
use crate::redundancy::Reputation;
use crate::types::{NodeId, Tick};

pub type Salt = [u8; 16];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub miner: NodeId,
    pub commit_digest: Digest256,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub miner: NodeId,
    pub seed: u64,
    #[serde(with = "hex_array")]
    pub salt: Salt,
}

fn commit_digest(seed: u64, salt: &Salt) -> Digest256 {
    Digest256::of_parts([&seed.to_le_bytes()[..], &salt[..]])
}

pub fn commit(miner: NodeId, seed: u64, salt: Salt) -> Commitment {
    Commitment {
        miner,
        commit_digest: commit_digest(seed, &salt),
    }
}

pub fn verify_reveal(c: &Commitment, seed: u64, salt: &Salt) -> bool {
    commit_digest(seed, salt) == c.commit_digest
}

/// Half-open tick interval `[start, end)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TicketWindow {
    pub start: Tick,
    pub end: Tick,
}

impl TicketWindow {
    pub fn contains(&self, t: Tick) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TicketTable {
    pub entries: BTreeMap<NodeId, u64>,
    pub window: TicketWindow,
}

impl TicketTable {
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn get(&self, miner: NodeId) -> u64 {
        self.entries.get(&miner).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Tickets for the accepted, SLA-respecting records stamped inside `window`:
/// `floor(reputation * count)` per miner. Miners left with no tickets are
/// omitted.
pub fn issue_tickets<'a>(
    records: impl IntoIterator<Item = (Tick, &'a PovmRecord)>,
    window: TicketWindow,
    reputation: impl Fn(NodeId) -> Reputation,
) -> TicketTable {
    let mut accepted: BTreeMap<NodeId, u64> = BTreeMap::new();
    for (t, r) in records {
        if window.contains(t) && r.verdict == RecordVerdict::Accepted && r.sla_ok {
            *accepted.entry(r.miner).or_default() += 1;
        }
    }
    let entries = accepted
        .into_iter()
        .map(|(m, n)| (m, (reputation(m).score() * n as f64).floor() as u64))
        .filter(|&(_, t)| t > 0)
        .collect();
    TicketTable { entries, window }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LotteryError {
    #[error("reveal from {0} does not match its commitment")]
    BadReveal(NodeId),
    #[error("no tickets to draw from")]
    EmptyTable,
}

/// Digest of all reveals concatenated in ascending miner-id order.
pub fn combined_randomness(reveals: &[Reveal]) -> Digest256 {
    let mut sorted: Vec<&Reveal> = reveals.iter().collect();
    sorted.sort_by_key(|r| r.miner);
    let mut e = Encoder::default();
    for r in sorted {
        r.encode(&mut e);
    }
    Digest256::of(&e.into_bytes())
}

fn check_reveals(reveals: &[Reveal], commitments: &[Commitment]) -> Result<(), LotteryError> {
    let mut seen = BTreeSet::new();
    for r in reveals {
        let ok = seen.insert(r.miner)
            && commitments
                .iter()
                .any(|c| c.miner == r.miner && verify_reveal(c, r.seed, &r.salt));
        if !ok {
            return Err(LotteryError::BadReveal(r.miner));
        }
    }
    Ok(())
}

/// Maps `value` into cumulative ticket intervals in ascending miner-id order.
pub fn pick_by_ticket(tickets: &TicketTable, value: u64) -> Option<NodeId> {
    let mut acc = 0u64;
    for (&m, &n) in &tickets.entries {
        acc += n;
        if value < acc {
            return Some(m);
        }
    }
    None
}

/// Strict draw: every reveal must open its miner's commitment.
pub fn draw_winner(
    reveals: &[Reveal],
    commitments: &[Commitment],
    tickets: &TicketTable,
) -> Result<NodeId, LotteryError> {
    check_reveals(reveals, commitments)?;
    let total = tickets.total();
    if total == 0 {
        return Err(LotteryError::EmptyTable);
    }
    let value = combined_randomness(reveals).mod_u64(total);
    Ok(pick_by_ticket(tickets, value).expect("value below ticket total"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub winner: NodeId,
    /// Ticket holders excluded this round, for bad or missing reveals.
    pub voided: Vec<NodeId>,
}

/// Draw with the voiding rule: ticket holders who did not reveal, or whose
/// reveal fails to open their commitment, lose their tickets for this round
/// and the draw is recomputed over the rest.
pub fn settle_draw(
    reveals: &[Reveal],
    commitments: &[Commitment],
    tickets: &TicketTable,
) -> Result<DrawOutcome, LotteryError> {
    let mut reveals = reveals.to_vec();
    let mut table = tickets.clone();
    let mut voided = Vec::new();
    let revealed: BTreeSet<NodeId> = reveals.iter().map(|r| r.miner).collect();
    table.entries.retain(|m, _| {
        let keep = revealed.contains(m);
        if !keep {
            voided.push(*m);
        }
        keep
    });
    loop {
        match draw_winner(&reveals, commitments, &table) {
            Ok(winner) => return Ok(DrawOutcome { winner, voided }),
            Err(LotteryError::BadReveal(m)) => {
                reveals.retain(|r| r.miner != m);
                if table.entries.remove(&m).is_some() {
                    voided.push(m);
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Fallback table for windows with no earned tickets: one ticket for each
/// miner whose reveal opens its commitment.
pub fn bootstrap_table(
    reveals: &[Reveal],
    commitments: &[Commitment],
    window: TicketWindow,
) -> TicketTable {
    let mut entries = BTreeMap::new();
    for r in reveals {
        if commitments
            .iter()
            .any(|c| c.miner == r.miner && verify_reveal(c, r.seed, &r.salt))
        {
            entries.insert(r.miner, 1);
        }
    }
    TicketTable { entries, window }
}

/// The full lottery transcript carried in a block in place of a nonce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LotteryProof {
    pub commitments: Vec<Commitment>,
    pub reveals: Vec<Reveal>,
    pub tickets: TicketTable,
    /// The table is the one-ticket-per-revealer fallback.
    pub bootstrap: bool,
    pub winner: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProofError {
    #[error(transparent)]
    Draw(#[from] LotteryError),
    #[error("recorded winner {recorded} but the transcript selects {computed}")]
    WrongWinner { recorded: NodeId, computed: NodeId },
    #[error("bootstrap table does not match the revealers")]
    BadBootstrap,
}

impl LotteryProof {
    /// Re-runs the draw from the transcript.
    pub fn verify(&self) -> Result<(), ProofError> {
        if self.bootstrap
            && self.tickets
                != bootstrap_table(&self.reveals, &self.commitments, self.tickets.window)
        {
            return Err(ProofError::BadBootstrap);
        }
        let computed = settle_draw(&self.reveals, &self.commitments, &self.tickets)?.winner;
        if computed != self.winner {
            return Err(ProofError::WrongWinner {
                recorded: self.winner,
                computed,
            });
        }
        Ok(())
    }
}

impl Encode for Commitment {
    fn encode(&self, e: &mut Encoder) {
        e.node(self.miner).digest(&self.commit_digest);
    }
}

impl Decode for Commitment {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Commitment {
            miner: d.node()?,
            commit_digest: d.digest()?,
        })
    }
}

impl Encode for Reveal {
    fn encode(&self, e: &mut Encoder) {
        e.node(self.miner).u64(self.seed).raw(&self.salt);
    }
}

impl Decode for Reveal {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Reveal {
            miner: d.node()?,
            seed: d.u64()?,
            salt: d.array()?,
        })
    }
}

impl Encode for TicketTable {
    fn encode(&self, e: &mut Encoder) {
        e.u64(self.window.start)
            .u64(self.window.end)
            .len(self.entries.len());
        for (&m, &n) in &self.entries {
            e.node(m).u64(n);
        }
    }
}

impl Decode for TicketTable {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let window = TicketWindow {
            start: d.u64()?,
            end: d.u64()?,
        };
        let n = d.len(12)?;
        let mut entries = BTreeMap::new();
        let mut last = None;
        for _ in 0..n {
            let (m, count) = (d.node()?, d.u64()?);
            if last.is_some_and(|l| l >= m) {
                return Err(DecodeError::Invalid(
                    "ticket entries not strictly ascending".into(),
                ));
            }
            last = Some(m);
            entries.insert(m, count);
        }
        Ok(TicketTable { entries, window })
    }
}

impl Encode for LotteryProof {
    fn encode(&self, e: &mut Encoder) {
        e.seq(&self.commitments).seq(&self.reveals);
        self.tickets.encode(e);
        e.bool(self.bootstrap).node(self.winner);
    }
}

impl Decode for LotteryProof {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(LotteryProof {
            commitments: d.seq(36)?,
            reveals: d.seq(28)?,
            tickets: TicketTable::decode(d)?,
            bootstrap: d.bool()?,
            winner: d.node()?,
        })
    }
}
