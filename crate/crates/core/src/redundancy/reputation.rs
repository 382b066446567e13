use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::NodeId;

/// How a clone's contribution to a job was judged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CloneOutcome {
    Agreed,
    Dissented,
    SlaViolated,
}

/// Score in `[0, 1]`. Agreement moves it a tenth of the way to 1; a dissent
/// or SLA violation halves it, so one lapse outweighs several agreements.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reputation(f64);

impl Reputation {
    pub const ALPHA: f64 = 0.1;
    pub const BETA: f64 = 0.5;
    /// Newcomers start fully trusted.
    pub const INITIAL: Reputation = Reputation(1.0);

    pub fn new(score: f64) -> Self {
        Reputation(if score.is_nan() {
            0.0
        } else {
            score.clamp(0.0, 1.0)
        })
    }

    pub fn score(self) -> f64 {
        self.0
    }
}

impl Default for Reputation {
    fn default() -> Self {
        Reputation::INITIAL
    }
}

pub fn update_reputation(r: Reputation, outcome: CloneOutcome) -> Reputation {
    let s = r.0;
    Reputation::new(match outcome {
        CloneOutcome::Agreed => s + Reputation::ALPHA * (1.0 - s),
        CloneOutcome::Dissented | CloneOutcome::SlaViolated => s * (1.0 - Reputation::BETA),
    })
}

/// Per-miner scores; unknown miners hold [`Reputation::INITIAL`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReputationLedger {
    scores: BTreeMap<NodeId, Reputation>,
}

impl ReputationLedger {
    pub fn get(&self, miner: NodeId) -> Reputation {
        self.scores.get(&miner).copied().unwrap_or_default()
    }

    pub fn apply(&mut self, miner: NodeId, outcome: CloneOutcome) -> Reputation {
        let r = update_reputation(self.get(miner), outcome);
        self.scores.insert(miner, r);
        r
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, Reputation)> + '_ {
        self.scores.iter().map(|(&k, &v)| (k, v))
    }
}
