use serde::{Deserialize, Serialize};

use crate::hashcash::Difficulty;
use crate::jobvm::{coinflip_program, Program, Sla};
use crate::types::{NodeId, Tick};

use super::energy::EnergyModel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Povm,
    HashcashBaseline,
}

/// Inclusive bounds on message delivery delay, in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latency {
    pub min: Tick,
    pub max: Tick,
}

impl Default for Latency {
    fn default() -> Self {
        Latency { min: 1, max: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Workload {
    pub jobs: u64,
    /// Coin-flip jobs counting flips until this many heads in a row.
    pub k_heads: u32,
    /// Program text; replaces the coin-flip program when set.
    pub program: Option<String>,
    pub input: Vec<i64>,
    pub first_submit: Tick,
    pub submit_interval: Tick,
}

impl Default for Workload {
    fn default() -> Self {
        Workload {
            jobs: 0,
            k_heads: 3,
            program: None,
            input: Vec::new(),
            first_submit: 1,
            submit_interval: 5,
        }
    }
}

impl Workload {
    pub fn program(&self) -> Result<Program, ConfigError> {
        match &self.program {
            Some(text) => text
                .parse()
                .map_err(|e| ConfigError::new("workload.program", e)),
            None => Ok(coinflip_program(self.k_heads)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Reports a wrong answer computed from honest checkpoints.
    WrongOutput,
    /// Stops at half the instructions the job needs and reports the breach.
    SlaBreach,
    /// Commits every lottery round but never reveals.
    WithholdReveal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adversary {
    pub miner: NodeId,
    pub behavior: Behavior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub miners: u32,
    pub customers: u32,
    /// Clones per job; odd.
    pub k: usize,
    /// Block cadence `m`.
    pub block_interval: Tick,
    /// Epoch length `T`; also the ticket eligibility window.
    pub epoch_length: Tick,
    /// Last tick at which a lottery round or job submission may start.
    pub horizon: Tick,
    pub sla: Sla,
    pub latency: Latency,
    /// Delay between the commit, reveal, and draw phases of a round.
    /// Defaults to `latency.max + 1` so every message of a phase arrives
    /// before the next phase starts.
    pub reveal_gap: Option<Tick>,
    pub seed: u64,
    pub mode: Mode,
    pub difficulty: Difficulty,
    /// Hashcash attempts per miner per round before the round is given up.
    pub max_round_attempts: u64,
    pub energy: EnergyModel,
    pub workload: Workload,
    /// VM instructions a miner executes per tick in each job slot.
    pub instructions_per_tick: u64,
    pub block_reward: u64,
    pub job_payment: u64,
    pub adversaries: Vec<Adversary>,
    /// Worker threads for prefetching clone executions; `None` uses the
    /// global pool.
    pub threads: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            miners: 5,
            customers: 1,
            k: 3,
            block_interval: 12,
            epoch_length: 120,
            horizon: 600,
            sla: Sla::default(),
            latency: Latency::default(),
            reveal_gap: None,
            seed: 0,
            mode: Mode::Povm,
            difficulty: Difficulty(8),
            max_round_attempts: 1 << 24,
            energy: EnergyModel::default(),
            workload: Workload::default(),
            instructions_per_tick: 100,
            block_reward: 50,
            job_payment: 10,
            adversaries: Vec::new(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &str, reason: impl std::fmt::Display) -> Self {
        ConfigError {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn reveal_gap(&self) -> Tick {
        self.reveal_gap.unwrap_or(self.latency.max + 1)
    }

    pub fn node_count(&self) -> u32 {
        self.miners + self.customers
    }

    pub fn miner_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.miners).map(NodeId)
    }

    pub fn customer_ids(&self) -> impl Iterator<Item = NodeId> {
        (self.miners..self.miners + self.customers).map(NodeId)
    }

    pub fn is_miner(&self, id: NodeId) -> bool {
        id.0 < self.miners
    }

    /// Concurrent job slots per miner: `ceil(T / m)`.
    pub fn slots_per_miner(&self) -> usize {
        self.epoch_length.div_ceil(self.block_interval) as usize
    }

    pub fn behavior(&self, miner: NodeId) -> Option<Behavior> {
        self.adversaries
            .iter()
            .find(|a| a.miner == miner)
            .map(|a| a.behavior)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.miners == 0 {
            return Err(ConfigError::new("miners", "at least one miner is required"));
        }
        if self.k == 0 || self.k.is_multiple_of(2) {
            return Err(ConfigError::new(
                "k",
                format!("must be odd, got {}", self.k),
            ));
        }
        if self.block_interval == 0 {
            return Err(ConfigError::new("block_interval", "must be at least 1"));
        }
        if self.epoch_length == 0 {
            return Err(ConfigError::new("epoch_length", "must be at least 1"));
        }
        if self.latency.min > self.latency.max {
            return Err(ConfigError::new("latency", "min exceeds max"));
        }
        if self.instructions_per_tick == 0 {
            return Err(ConfigError::new(
                "instructions_per_tick",
                "must be at least 1",
            ));
        }
        if self.max_round_attempts == 0 {
            return Err(ConfigError::new("max_round_attempts", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::new("threads", "must be at least 1"));
        }
        self.sla
            .validate()
            .map_err(|e| ConfigError::new("sla", e))?;
        if self.workload.jobs > 0 {
            if self.customers == 0 {
                return Err(ConfigError::new(
                    "customers",
                    "jobs need at least one customer",
                ));
            }
            if self.workload.submit_interval == 0 {
                return Err(ConfigError::new(
                    "workload.submit_interval",
                    "must be at least 1",
                ));
            }
            if self.mode == Mode::Povm && (self.miners as usize) < self.k {
                return Err(ConfigError::new(
                    "k",
                    format!("{} clones need at least {} miners", self.k, self.k),
                ));
            }
            self.workload.program()?;
        }
        for a in &self.adversaries {
            if !self.is_miner(a.miner) {
                return Err(ConfigError::new(
                    "adversaries",
                    format!("{} is not a miner", a.miner),
                ));
            }
        }
        if self.energy.grams_co2_per_joule < 0.0 || !self.energy.grams_co2_per_joule.is_finite() {
            return Err(ConfigError::new(
                "energy.grams_co2_per_joule",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}
