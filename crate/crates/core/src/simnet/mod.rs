//! Deterministic discrete-event network of miner and customer nodes.
//!
//! Events are delivered in `(deliver_at, seq)` order from a single queue;
//! latencies come from one scenario PRNG, and every map is ordered, so a
//! `(config, seed)` pair fixes the whole run, chain digest included.
//!
//! Each PoVM round `r` starts at tick `r * m`: miners commit, reveal one
//! reveal gap later, and draw one gap after that. The winner seals a block
//! with the lottery transcript and broadcasts it. Customers submit jobs to
//! the replicated queue and dispatch `k` clones; every node tallies clone
//! results itself, so any producer can include the resulting records.

mod config;
mod energy;
mod event;
mod node;
mod queue;
mod report;
mod tickets;
mod tree;
mod world;

pub use config::{Adversary, Behavior, ConfigError, Latency, Mode, ScenarioConfig, Workload};
pub use energy::{account_energy, EnergyCounters, EnergyModel, EnergyReport, TauTerms};
pub use event::{CloneResult, EventQueue, Payload, SimEvent, Timer};
pub use node::{
    payment_tx_id, reward_tx_id, validate_block, JobProgress, Node, NodeCounters, Role,
};
pub use queue::{enqueue_job, JobQueue, QueueError};
pub use report::{settled_jobs, ticket_tables, JobCounts, MetricsRow, NodeReport, SimReport};
pub use tickets::{expected_tickets, job_groups, replay_reputation, ticket_window};
pub use tree::{BlockTree, Inserted, TreeStats};
pub use world::{run_scenario, SimError, Step, World};
