use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::digest::Digest256;
use crate::hashchain::{Block, Chain, Mempool, PovmRecord, RecordVerdict, Seal, Transaction};
use crate::jobvm::{
    derive_seed, execute, execute_with_fault, ExecutionTrace, Fault, Job, SplitMix64,
};
use crate::lottery::{
    bootstrap_table, commit, settle_draw, Commitment, LotteryError, LotteryProof, Reveal, Salt,
};
use crate::redundancy::{assign_clones, povm_records, CloneAssignment};
use crate::types::{JobId, NodeId, Tick};

use super::config::{Behavior, Mode, ScenarioConfig};
use super::event::{CloneResult, Payload, Timer};
use super::queue::{enqueue_job, JobQueue};
use super::tickets::expected_tickets;
use super::tree::{BlockTree, Inserted};

pub(crate) const TAG_JOB_SEED: u64 = 1;
pub(crate) const TAG_ASSIGN: u64 = 2;
pub(crate) const TAG_NODE: u64 = 3;
pub(crate) const TAG_LATENCY: u64 = 4;

const REWARD_TX_BIT: u64 = 1 << 63;
const PAYMENT_TX_BIT: u64 = 1 << 62;

pub fn reward_tx_id(height: u64) -> u64 {
    REWARD_TX_BIT | height
}

pub fn payment_tx_id(job_id: JobId, miner: NodeId) -> u64 {
    PAYMENT_TX_BIT | (job_id << 24) | miner.0 as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Miner,
    Customer,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounters {
    pub vm_instructions: u64,
    pub clone_executions: u64,
    pub hash_ops: u64,
    pub messages_sent: u64,
    pub dispatch_messages: u64,
    pub blocks_announced: u64,
    pub lottery_rounds_won: u64,
}

/// What a handler asks the network to do.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Out {
    Send(NodeId, Payload),
    /// To every node, the sender included.
    Broadcast(Payload),
    Timer(Tick, Timer),
}

/// Read-only facts every node shares.
pub struct Ctx<'a> {
    pub config: &'a ScenarioConfig,
    pub miners: &'a BTreeSet<NodeId>,
    /// Honest executions, computed ahead of time.
    pub honest: &'a BTreeMap<JobId, ExecutionTrace>,
    pub jobs: &'a [Job],
}

impl Ctx<'_> {
    pub fn assignment(&self, job: &Job, attempt: u32) -> CloneAssignment {
        let mut rng = SplitMix64::new(derive_seed(
            self.config.seed,
            &[TAG_ASSIGN, job.id, attempt as u64],
        ));
        assign_clones(job, self.miners, self.config.k, &mut rng)
            .expect("config validated against k")
    }
}

#[derive(Clone, Debug, Default)]
struct PartialClone {
    result: Option<CloneResult>,
    checkpoints: Option<Vec<crate::jobvm::Checkpoint>>,
}

#[derive(Clone, Debug, Default)]
struct Round {
    own: Option<(u64, Salt)>,
    commitments: BTreeMap<NodeId, Commitment>,
    reveals: BTreeMap<NodeId, Reveal>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobProgress {
    pub attempts: u32,
    pub tallied: u32,
    pub records: Option<Vec<PovmRecord>>,
}

impl JobProgress {
    pub fn accepted(&self) -> bool {
        self.records
            .as_ref()
            .is_some_and(|rs| rs.iter().any(|r| r.verdict == RecordVerdict::Accepted))
    }
}

pub struct Node {
    pub id: NodeId,
    pub role: Role,
    tree: BlockTree,
    queue: JobQueue,
    mempool: Mempool,
    rng: SplitMix64,
    clones: BTreeMap<(JobId, u32), BTreeMap<NodeId, PartialClone>>,
    progress: BTreeMap<JobId, JobProgress>,
    backlog: VecDeque<(Job, u32)>,
    running: BTreeMap<(JobId, u32), ExecutionTrace>,
    rounds: BTreeMap<u64, Round>,
    pub counters: NodeCounters,
}

impl Node {
    pub fn new(id: NodeId, role: Role, config: &ScenarioConfig) -> Self {
        Node {
            id,
            role,
            tree: BlockTree::new(Chain::new(config.difficulty)),
            queue: JobQueue::default(),
            mempool: Mempool::default(),
            rng: SplitMix64::new(derive_seed(config.seed, &[TAG_NODE, id.0 as u64])),
            clones: BTreeMap::new(),
            progress: BTreeMap::new(),
            backlog: VecDeque::new(),
            running: BTreeMap::new(),
            rounds: BTreeMap::new(),
            counters: NodeCounters::default(),
        }
    }

    pub fn chain(&self) -> &Chain {
        self.tree.chain()
    }

    pub fn tree(&self) -> &BlockTree {
        &self.tree
    }

    pub fn queue(&self) -> &JobQueue {
        &self.queue
    }

    pub fn progress(&self) -> &BTreeMap<JobId, JobProgress> {
        &self.progress
    }

    pub fn handle(&mut self, now: Tick, from: NodeId, payload: Payload, ctx: &Ctx<'_>) -> Vec<Out> {
        let mut out = Vec::new();
        match payload {
            Payload::Timer(t) => self.on_timer(now, t, ctx, &mut out),
            Payload::JobSubmit { job, submit_tick } => {
                self.progress.entry(job.id).or_default();
                if enqueue_job(&mut self.queue, *job, submit_tick).is_err() {
                    log::warn!("{}: duplicate job submission", self.id);
                }
            }
            Payload::JobAssign { job, attempt } => {
                if self.role == Role::Miner {
                    self.backlog.push_back((*job, attempt));
                    self.start_clones(now, ctx, &mut out);
                }
            }
            Payload::JobResult(r) => {
                let key = (r.job_id, r.attempt);
                let miner = r.miner;
                self.clones
                    .entry(key)
                    .or_default()
                    .entry(miner)
                    .or_default()
                    .result = Some(r);
                self.try_tally(now, key, ctx, &mut out);
            }
            Payload::CheckpointBatch {
                job_id,
                attempt,
                miner,
                checkpoints,
            } => {
                let key = (job_id, attempt);
                self.clones
                    .entry(key)
                    .or_default()
                    .entry(miner)
                    .or_default()
                    .checkpoints = Some(checkpoints);
                self.try_tally(now, key, ctx, &mut out);
            }
            // only miners take part in the lottery
            Payload::Commit { round, commitment } => {
                if self.role == Role::Miner && commitment.miner == from {
                    self.rounds
                        .entry(round)
                        .or_default()
                        .commitments
                        .entry(from)
                        .or_insert(commitment);
                }
            }
            Payload::Reveal { round, reveal } => {
                if self.role == Role::Miner && reveal.miner == from {
                    if let Some(r) = self.rounds.get_mut(&round) {
                        r.reveals.entry(from).or_insert(reveal);
                    }
                }
            }
            Payload::BlockAnnounce(block) => self.on_block(*block, ctx),
            Payload::TxSubmit(tx) => {
                self.mempool.insert(tx);
            }
        }
        out
    }

    fn on_timer(&mut self, now: Tick, t: Timer, ctx: &Ctx<'_>, out: &mut Vec<Out>) {
        match t {
            Timer::SubmitJob { index } => {
                let job = ctx.jobs[index as usize].clone();
                out.push(Out::Broadcast(Payload::JobSubmit {
                    job: Box::new(job.clone()),
                    submit_tick: now,
                }));
                self.dispatch(&job, 1, ctx, out);
            }
            Timer::CloneDone { job_id, attempt } => {
                let trace = self
                    .running
                    .remove(&(job_id, attempt))
                    .expect("clone was running");
                out.push(Out::Broadcast(Payload::JobResult(CloneResult {
                    job_id,
                    attempt,
                    miner: self.id,
                    output: trace.output,
                    status: trace.status,
                    instructions_executed: trace.instructions_executed,
                    peak_memory_cells: trace.peak_memory_cells,
                })));
                out.push(Out::Broadcast(Payload::CheckpointBatch {
                    job_id,
                    attempt,
                    miner: self.id,
                    checkpoints: trace.checkpoints,
                }));
                self.start_clones(now, ctx, out);
            }
            Timer::RoundStart { round } => {
                let seed = self.rng.next_u64();
                let mut salt = [0u8; 16];
                self.rng.fill(&mut salt);
                self.rounds.entry(round).or_default().own = Some((seed, salt));
                out.push(Out::Broadcast(Payload::Commit {
                    round,
                    commitment: commit(self.id, seed, salt),
                }));
                out.push(Out::Timer(
                    now + ctx.config.reveal_gap(),
                    Timer::RevealPhase { round },
                ));
            }
            Timer::RevealPhase { round } => {
                let own = self.rounds.get(&round).and_then(|r| r.own);
                if let (Some((seed, salt)), false) = (
                    own,
                    ctx.config.behavior(self.id) == Some(Behavior::WithholdReveal),
                ) {
                    out.push(Out::Broadcast(Payload::Reveal {
                        round,
                        reveal: Reveal {
                            miner: self.id,
                            seed,
                            salt,
                        },
                    }));
                }
                out.push(Out::Timer(
                    now + ctx.config.reveal_gap(),
                    Timer::Draw { round },
                ));
            }
            Timer::Draw { round } => {
                let state = self.rounds.remove(&round).unwrap_or_default();
                self.rounds.retain(|&r, _| r > round);
                if let Some(block) = self.draw(round * ctx.config.block_interval, state, ctx) {
                    self.counters.lottery_rounds_won += 1;
                    self.announce(block, out);
                }
            }
        }
    }

    fn dispatch(&mut self, job: &Job, attempt: u32, ctx: &Ctx<'_>, out: &mut Vec<Out>) {
        for m in ctx.assignment(job, attempt).miners {
            self.counters.dispatch_messages += 1;
            out.push(Out::Send(
                m,
                Payload::JobAssign {
                    job: Box::new(job.clone()),
                    attempt,
                },
            ));
        }
    }

    fn run_clone(&self, job: &Job, ctx: &Ctx<'_>) -> ExecutionTrace {
        let honest = || {
            ctx.honest
                .get(&job.id)
                .cloned()
                .unwrap_or_else(|| execute(job))
        };
        match ctx.config.behavior(self.id) {
            Some(Behavior::WrongOutput) => execute_with_fault(
                job,
                Some(Fault::CorruptOutput {
                    delta: 1 + self.id.0 as i64,
                }),
            ),
            Some(Behavior::SlaBreach) => {
                let mut short = job.clone();
                short.sla.max_instructions = (honest().instructions_executed / 2).max(1);
                execute(&short)
            }
            _ => honest(),
        }
    }

    fn start_clones(&mut self, now: Tick, ctx: &Ctx<'_>, out: &mut Vec<Out>) {
        while self.running.len() < ctx.config.slots_per_miner() {
            let Some((job, attempt)) = self.backlog.pop_front() else {
                break;
            };
            let trace = self.run_clone(&job, ctx);
            self.counters.vm_instructions += trace.instructions_executed;
            self.counters.clone_executions += 1;
            let ticks = trace
                .instructions_executed
                .div_ceil(ctx.config.instructions_per_tick)
                .max(1);
            self.running.insert((job.id, attempt), trace);
            out.push(Out::Timer(
                now + ticks,
                Timer::CloneDone {
                    job_id: job.id,
                    attempt,
                },
            ));
        }
    }

    fn try_tally(&mut self, now: Tick, key: (JobId, u32), ctx: &Ctx<'_>, out: &mut Vec<Out>) {
        let (job_id, attempt) = key;
        let Some(job) = ctx.jobs.iter().find(|j| j.id == job_id) else {
            return;
        };
        let progress = self.progress.entry(job_id).or_default();
        if progress.records.is_some() || progress.tallied >= attempt {
            return;
        }
        let assignment = ctx.assignment(job, attempt);
        let Some(parts) = self.clones.get(&key) else {
            return;
        };
        let mut traces = Vec::with_capacity(assignment.miners.len());
        for m in &assignment.miners {
            let Some(PartialClone {
                result: Some(r),
                checkpoints: Some(c),
            }) = parts.get(m)
            else {
                return;
            };
            traces.push((
                *m,
                ExecutionTrace {
                    output: r.output,
                    instructions_executed: r.instructions_executed,
                    peak_memory_cells: r.peak_memory_cells,
                    checkpoints: c.clone(),
                    status: r.status,
                },
            ));
        }
        self.clones.remove(&key);
        progress.tallied = attempt;
        progress.attempts = progress.attempts.max(attempt);
        let refs: Vec<_> = traces.iter().map(|(m, t)| (*m, t)).collect();
        let records = povm_records(job_id, &refs);
        let accepted = records.iter().any(|r| r.verdict == RecordVerdict::Accepted);
        if !accepted && attempt == 1 {
            // no majority: the customer dispatches fresh clones once
            progress.attempts = 2;
            if job.customer == self.id {
                self.dispatch(job, 2, ctx, out);
            }
            return;
        }
        if accepted && job.customer == self.id {
            for r in records
                .iter()
                .filter(|r| r.verdict == RecordVerdict::Accepted)
            {
                let tx = Transaction {
                    id: payment_tx_id(job_id, r.miner),
                    payer: self.id,
                    payee: r.miner,
                    amount: ctx.config.job_payment,
                    timestamp: now,
                };
                out.push(Out::Broadcast(Payload::TxSubmit(tx)));
            }
        }
        progress.records = Some(records);
    }

    fn draw(&mut self, tick: Tick, state: Round, ctx: &Ctx<'_>) -> Option<Block> {
        let chain = self.tree.chain();
        let commitments: Vec<Commitment> = state.commitments.into_values().collect();
        let reveals: Vec<Reveal> = state.reveals.into_values().collect();
        let expected = expected_tickets(chain, tick, ctx.config.epoch_length);
        let (tickets, bootstrap, outcome) = match settle_draw(&reveals, &commitments, &expected) {
            Ok(o) => (expected, false, o),
            Err(LotteryError::EmptyTable) => {
                let t = bootstrap_table(&reveals, &commitments, expected.window);
                let o = settle_draw(&reveals, &commitments, &t).ok()?;
                (t, true, o)
            }
            Err(e) => {
                log::warn!("{}: draw failed: {e}", self.id);
                return None;
            }
        };
        if outcome.winner != self.id {
            return None;
        }
        let proof = LotteryProof {
            commitments,
            reveals,
            tickets,
            bootstrap,
            winner: self.id,
        };
        let mut block = self.candidate(tick, ctx);
        block.povm_records = self
            .progress
            .iter()
            .filter(|(id, _)| !chain.contains_job(**id))
            .filter_map(|(_, p)| p.records.clone())
            .flatten()
            .collect();
        block.seal = Seal::Lottery(proof);
        match chain.check_append(&block) {
            Ok(_) => Some(block),
            Err(e) => {
                log::error!("{}: own block rejected: {e}", self.id);
                None
            }
        }
    }

    /// Block template on the current tip: reward plus pending transactions.
    pub fn candidate(&self, tick: Tick, ctx: &Ctx<'_>) -> Block {
        let chain = self.tree.chain();
        let tip = chain.tip();
        let height = tip.block.height + 1;
        let mut transactions = vec![Transaction {
            id: reward_tx_id(height),
            payer: NodeId::SYSTEM,
            payee: self.id,
            amount: ctx.config.block_reward,
            timestamp: tick,
        }];
        transactions.extend(
            self.mempool
                .pending()
                .iter()
                .filter(|t| !chain.contains_transaction(t.id))
                .copied(),
        );
        Block {
            height,
            prev_digest: tip.digest,
            timestamp: tick,
            producer: self.id,
            transactions,
            povm_records: Vec::new(),
            seal: Seal::Nonce(0),
        }
    }

    pub fn announce(&mut self, block: Block, out: &mut Vec<Out>) {
        self.counters.blocks_announced += 1;
        out.push(Out::Broadcast(Payload::BlockAnnounce(Box::new(block))));
    }

    fn on_block(&mut self, block: Block, ctx: &Ctx<'_>) {
        let cfg = ctx.config;
        let validate = |chain: &Chain, b: &Block| validate_block(cfg, chain, b);
        for r in self.tree.insert(block, &validate) {
            match r {
                Inserted::Rejected(e) => log::warn!("{}: rejected block: {e}", self.id),
                Inserted::Reorganized { depth } => {
                    log::debug!("{}: reorganized {depth} deep", self.id)
                }
                _ => {}
            }
        }
    }

    pub fn tip_digest(&self) -> Digest256 {
        self.tree.chain().tip().digest
    }
}

/// Mode-specific checks beyond [`Chain::check_append`]: lottery blocks must
/// sit on a round tick and carry the ticket table the chain implies.
pub fn validate_block(cfg: &ScenarioConfig, chain: &Chain, b: &Block) -> Result<(), String> {
    if b.timestamp <= chain.tip().block.timestamp {
        return Err("timestamp does not advance".into());
    }
    match (&b.seal, cfg.mode) {
        (Seal::Nonce(_), Mode::HashcashBaseline) => Ok(()),
        (Seal::Lottery(p), Mode::Povm) => {
            if !b.timestamp.is_multiple_of(cfg.block_interval) {
                return Err("timestamp is not a round tick".into());
            }
            let expected = expected_tickets(chain, b.timestamp, cfg.epoch_length);
            if p.bootstrap {
                match settle_draw(&p.reveals, &p.commitments, &expected) {
                    Err(LotteryError::EmptyTable) if p.tickets.window == expected.window => Ok(()),
                    _ => Err("bootstrap tickets used while earned tickets exist".into()),
                }
            } else if p.tickets != expected {
                Err("ticket table does not match the chain".into())
            } else {
                Ok(())
            }
        }
        _ => Err("seal does not match the scenario mode".into()),
    }
}
