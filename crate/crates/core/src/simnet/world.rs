use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::hashcash::{mine, HashMeter};
use crate::hashchain::{validate_chain, Seal};
use crate::jobvm::{derive_seed, execute, ExecutionTrace, Job, SplitMix64};
use crate::types::{JobId, NodeId, Tick};

use super::config::{ConfigError, Mode, ScenarioConfig};
use super::energy::{account_energy, EnergyCounters};
use super::event::{EventQueue, Payload, SimEvent, Timer};
use super::node::{validate_block, Ctx, Node, Out, Role, TAG_JOB_SEED, TAG_LATENCY};
use super::report::{settled_jobs, ticket_tables, JobCounts, MetricsRow, NodeReport, SimReport};
use super::tickets::{expected_tickets, replay_reputation};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("trace output: {0}")]
    Trace(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// The queue was empty; nothing happened.
    Idle,
    Delivered {
        at: Tick,
        kind: &'static str,
    },
}

/// Index of node 0, whose view the report is written from.
const OBSERVER: usize = 0;

pub struct World {
    config: ScenarioConfig,
    jobs: Vec<Job>,
    honest: BTreeMap<JobId, ExecutionTrace>,
    miners: BTreeSet<NodeId>,
    nodes: Vec<Node>,
    queue: EventQueue,
    rng: SplitMix64,
    now: Tick,
    next_sample: Tick,
    metrics: Vec<MetricsRow>,
    trace: Option<Box<dyn Write>>,
}

fn make_jobs(cfg: &ScenarioConfig) -> Result<Vec<Job>, ConfigError> {
    if cfg.workload.jobs == 0 || cfg.mode == Mode::HashcashBaseline {
        return Ok(Vec::new());
    }
    let program = cfg.workload.program()?;
    Ok((0..cfg.workload.jobs)
        .map(|i| Job {
            id: i,
            program: program.clone(),
            input: cfg.workload.input.clone(),
            sla: cfg.sla,
            customer: NodeId(cfg.miners + (i % cfg.customers as u64) as u32),
            seed: derive_seed(cfg.seed, &[TAG_JOB_SEED, i]),
        })
        .collect())
}

/// Honest executions depend only on the job, so they can run on any number
/// of threads without affecting the outcome.
fn prefetch(
    jobs: &[Job],
    threads: Option<usize>,
) -> Result<BTreeMap<JobId, ExecutionTrace>, SimError> {
    let run = || {
        jobs.par_iter()
            .map(|j| (j.id, execute(j)))
            .collect::<Vec<_>>()
    };
    let traces = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(traces.into_iter().collect())
}

impl World {
    pub fn new(config: ScenarioConfig) -> Result<World, SimError> {
        config.validate()?;
        let jobs = make_jobs(&config)?;
        let honest = prefetch(&jobs, config.threads)?;
        let miners: BTreeSet<NodeId> = config.miner_ids().collect();
        let nodes = (0..config.node_count())
            .map(|i| {
                let id = NodeId(i);
                let role = if config.is_miner(id) {
                    Role::Miner
                } else {
                    Role::Customer
                };
                Node::new(id, role, &config)
            })
            .collect();
        let mut w = World {
            rng: SplitMix64::new(derive_seed(config.seed, &[TAG_LATENCY])),
            next_sample: config.block_interval,
            config,
            jobs,
            honest,
            miners,
            nodes,
            queue: EventQueue::default(),
            now: 0,
            metrics: Vec::new(),
            trace: None,
        };
        w.schedule();
        Ok(w)
    }

    /// Writes every delivered event as one JSON line.
    pub fn with_trace(mut self, out: Box<dyn Write>) -> Self {
        self.trace = Some(out);
        self
    }

    fn schedule(&mut self) {
        let cfg = &self.config;
        for job in &self.jobs {
            let at = cfg.workload.first_submit + job.id * cfg.workload.submit_interval;
            if at <= cfg.horizon {
                let p = Payload::Timer(Timer::SubmitJob { index: job.id });
                self.queue.push(at, job.customer, job.customer, p);
            }
        }
        for round in 1..=cfg.horizon / cfg.block_interval {
            let at = round * cfg.block_interval;
            let p = || Payload::Timer(Timer::RoundStart { round });
            match cfg.mode {
                Mode::Povm => {
                    for m in cfg.miner_ids() {
                        self.queue.push(at, m, m, p());
                    }
                }
                Mode::HashcashBaseline => {
                    self.queue.push(at, NodeId::SYSTEM, NodeId::SYSTEM, p());
                }
            }
        }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Injects an event, as a test harness would.
    pub fn push_event(
        &mut self,
        deliver_at: Tick,
        from: NodeId,
        to: NodeId,
        payload: Payload,
    ) -> u64 {
        self.queue.push(deliver_at, from, to, payload)
    }

    /// Delivers the earliest pending event.
    pub fn step(&mut self) -> Result<Step, SimError> {
        let Some(ev) = self.queue.pop() else {
            return Ok(Step::Idle);
        };
        while self.next_sample < ev.deliver_at {
            self.sample(self.next_sample);
            self.next_sample += self.config.block_interval;
        }
        self.now = ev.deliver_at;
        if let Some(out) = self.trace.as_mut() {
            serde_json::to_writer(&mut *out, &ev).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        let kind = ev.payload.kind();
        self.deliver(ev);
        Ok(Step::Delivered { at: self.now, kind })
    }

    fn deliver(&mut self, ev: SimEvent) {
        let SimEvent {
            to, from, payload, ..
        } = ev;
        if to == NodeId::SYSTEM {
            if let Payload::Timer(Timer::RoundStart { round }) = payload {
                self.baseline_round(round);
            }
            return;
        }
        let ctx = Ctx {
            config: &self.config,
            miners: &self.miners,
            honest: &self.honest,
            jobs: &self.jobs,
        };
        let outs = self.nodes[to.0 as usize].handle(self.now, from, payload, &ctx);
        self.route(to, outs);
    }

    fn route(&mut self, from: NodeId, outs: Vec<Out>) {
        for o in outs {
            match o {
                Out::Timer(at, t) => {
                    self.queue.push(at, from, from, Payload::Timer(t));
                }
                Out::Send(to, p) => self.send(from, to, p),
                Out::Broadcast(p) => {
                    for i in 0..self.nodes.len() as u32 {
                        self.send(from, NodeId(i), p.clone());
                    }
                }
            }
        }
    }

    fn send(&mut self, from: NodeId, to: NodeId, p: Payload) {
        let at = if from == to {
            self.now
        } else {
            self.nodes[from.0 as usize].counters.messages_sent += 1;
            self.now
                + self
                    .rng
                    .range_inclusive(self.config.latency.min, self.config.latency.max)
        };
        self.queue.push(at, from, to, p);
    }

    /// Every miner hashes its own candidate block; attempts are interleaved
    /// in a random order and the first valid nonce wins the round.
    fn baseline_round(&mut self, round: u64) {
        let tick = round * self.config.block_interval;
        let d = self.config.difficulty;
        let ctx = Ctx {
            config: &self.config,
            miners: &self.miners,
            honest: &self.honest,
            jobs: &self.jobs,
        };
        let mut racers: Vec<(usize, Vec<u8>, u64, crate::hashchain::Block)> = self
            .config
            .miner_ids()
            .map(|m| {
                let b = self.nodes[m.0 as usize].candidate(tick, &ctx);
                (m.0 as usize, b.pow_preimage(), self.rng.next_u64(), b)
            })
            .collect();
        for i in (1..racers.len()).rev() {
            let j = self.rng.below(i as u64 + 1) as usize;
            racers.swap(i, j);
        }
        let mut meters = vec![HashMeter::default(); racers.len()];
        let mut winner = None;
        'race: for a in 0..self.config.max_round_attempts {
            for (slot, (_, preimage, start, _)) in racers.iter().enumerate() {
                if let Ok(found) = mine(preimage, d, start.wrapping_add(a), 1, &mut meters[slot]) {
                    winner = Some((slot, found.nonce));
                    break 'race;
                }
            }
        }
        for (slot, (idx, ..)) in racers.iter().enumerate() {
            self.nodes[*idx].counters.hash_ops += meters[slot].hash_ops;
        }
        let Some((slot, nonce)) = winner else {
            log::warn!("round {round}: no miner found a nonce");
            return;
        };
        let (idx, _, _, mut block) = racers.swap_remove(slot);
        block.seal = Seal::Nonce(nonce);
        let mut outs = Vec::new();
        self.nodes[idx].announce(block, &mut outs);
        self.route(NodeId(idx as u32), outs);
    }

    fn sample(&mut self, tick: Tick) {
        let chain = self.nodes[OBSERVER].chain();
        let settled = settled_jobs(chain);
        let accepted = settled.values().filter(|&&a| a).count() as u64;
        let tickets = ticket_tables(chain)
            .iter()
            .filter(|t| t.window.end <= tick)
            .map(|t| t.total())
            .sum();
        self.metrics.push(MetricsRow {
            tick,
            blocks: chain.height(),
            jobs_accepted: accepted,
            jobs_rejected: settled.len() as u64 - accepted,
            vm_instructions: self.nodes.iter().map(|n| n.counters.vm_instructions).sum(),
            hash_ops: self.nodes.iter().map(|n| n.counters.hash_ops).sum(),
            tickets_issued: tickets,
        });
    }

    /// Runs until no events remain and assembles the report.
    pub fn run(mut self) -> Result<SimReport, SimError> {
        while let Step::Delivered { .. } = self.step()? {}
        self.finish()
    }

    fn finish(mut self) -> Result<SimReport, SimError> {
        if self.metrics.last().is_none_or(|r| r.tick < self.now) {
            while self.next_sample < self.now {
                self.sample(self.next_sample);
                self.next_sample += self.config.block_interval;
            }
            self.sample(self.now);
        }
        if let Some(out) = self.trace.as_mut() {
            out.flush()?;
        }
        let cfg = &self.config;
        let observer = &self.nodes[OBSERVER];
        let chain = observer.chain().clone();

        let report = validate_chain(&chain);
        if let Some(f) = report.first_failure() {
            return Err(SimError::Invariant(format!(
                "observer chain invalid at {}: {}",
                f.index, f.kind
            )));
        }
        for b in chain.blocks().skip(1) {
            let parent = {
                let mut c = chain.clone();
                c.truncate(b.height - 1);
                c
            };
            validate_block(cfg, &parent, b).map_err(|e| {
                SimError::Invariant(format!("block {} fails scenario rules: {e}", b.height))
            })?;
            if let Some(p) = b.lottery_proof().filter(|p| !p.bootstrap) {
                if p.tickets != expected_tickets(&parent, b.timestamp, cfg.epoch_length) {
                    return Err(SimError::Invariant(format!(
                        "ticket table at {} not conserved",
                        b.height
                    )));
                }
            }
        }

        let submitted = observer.queue().len() as u64;
        let settled = settled_jobs(&chain);
        if let Some(id) = settled.keys().find(|id| !observer.queue().contains(**id)) {
            return Err(SimError::Invariant(format!(
                "job {id} on chain was never submitted"
            )));
        }
        let accepted = settled.values().filter(|&&a| a).count() as u64;
        let rejected = settled.len() as u64 - accepted;
        let jobs = JobCounts {
            submitted,
            accepted,
            rejected,
            requeued: observer
                .progress()
                .values()
                .filter(|p| p.attempts >= 2)
                .count() as u64,
            pending: submitted - accepted - rejected,
        };

        let mut blocks_per_producer = BTreeMap::new();
        for b in chain.blocks().skip(1) {
            *blocks_per_producer.entry(b.producer).or_insert(0u64) += 1;
        }
        let ledger = replay_reputation(&chain, Tick::MAX);
        let agreed_height = (0..chain.len())
            .take_while(|&i| {
                let d = chain.entries()[i].digest;
                self.nodes
                    .iter()
                    .all(|n| n.chain().get(i).is_some_and(|e| e.digest == d))
            })
            .count() as u64
            - 1;
        let nodes: Vec<NodeReport> = self
            .nodes
            .iter()
            .map(|n| NodeReport {
                id: n.id,
                role: n.role,
                tip_height: n.chain().height(),
                tip_digest: n.tip_digest(),
                counters: n.counters,
                tree: n.tree().stats,
                reputation: ledger.get(n.id).score(),
                blocks_produced: blocks_per_producer.get(&n.id).copied().unwrap_or(0),
            })
            .collect();
        let counters = EnergyCounters {
            hash_ops: nodes.iter().map(|n| n.counters.hash_ops).sum(),
            vm_instructions: nodes.iter().map(|n| n.counters.vm_instructions).sum(),
            clone_executions: nodes.iter().map(|n| n.counters.clone_executions).sum(),
            dispatch_messages: nodes.iter().map(|n| n.counters.dispatch_messages).sum(),
            miners: cfg.miners as u64,
            k: cfg.k as u64,
        };
        let tables = ticket_tables(&chain);
        Ok(SimReport {
            mode: cfg.mode,
            seed: cfg.seed,
            final_tick: self.now,
            chain_height: chain.height(),
            tip_digest: chain.tip().digest,
            jobs,
            tickets_issued: tables.iter().map(|t| t.total()).sum(),
            ticket_tables: tables,
            bootstrap_blocks: chain
                .blocks()
                .filter(|b| b.lottery_proof().is_some_and(|p| p.bootstrap))
                .count() as u64,
            blocks_per_producer,
            forks_observed: nodes.iter().map(|n| n.tree.forks_observed).sum(),
            reorgs: nodes.iter().map(|n| n.tree.reorgs).sum(),
            stale_blocks: nodes.iter().map(|n| n.tree.stale_blocks).sum(),
            rejected_blocks: nodes.iter().map(|n| n.tree.rejected_blocks).sum(),
            agreed_height,
            energy: account_energy(&counters, &cfg.energy),
            counters,
            nodes,
            chain,
            metrics: self.metrics,
        })
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<SimReport, SimError> {
    World::new(config.clone())?.run()
}
