use std::fmt;

use serde::{Deserialize, Serialize};

/// Simulation time. One tick is one simulated minute by convention.
pub type Tick = u64;

/// A VM machine word.
pub type Word = i64;

pub type JobId = u64;

/// Identity of a participant (miner or customer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Pseudo-node that pays block rewards and receives job fees.
    pub const SYSTEM: NodeId = NodeId(u32::MAX);
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == NodeId::SYSTEM {
            f.write_str("system")
        } else {
            write!(f, "n{}", self.0)
        }
    }
}
