use serde::{Deserialize, Serialize};

use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};
use crate::types::Tick;

/// Resource contract for one job.
///
/// The instruction budget stands in for an instructions-per-second rate
/// multiplied by the epoch length; floating-point work is not metered apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sla {
    pub max_instructions: u64,
    /// Cap on VM words in use (operand stack plus memory cells).
    pub max_memory_cells: u64,
    pub checkpoint_interval: u64,
    pub epoch_length_ticks: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SlaError {
    #[error("sla.{0} must be at least 1")]
    Zero(&'static str),
    #[error("sla.checkpoint_interval ({interval}) exceeds sla.max_instructions ({max})")]
    IntervalTooLarge { interval: u64, max: u64 },
}

impl Sla {
    pub fn new(
        max_instructions: u64,
        max_memory_cells: u64,
        checkpoint_interval: u64,
        epoch_length_ticks: Tick,
    ) -> Result<Self, SlaError> {
        let sla = Sla {
            max_instructions,
            max_memory_cells,
            checkpoint_interval,
            epoch_length_ticks,
        };
        sla.validate()?;
        Ok(sla)
    }

    pub fn validate(&self) -> Result<(), SlaError> {
        for (name, v) in [
            ("max_instructions", self.max_instructions),
            ("max_memory_cells", self.max_memory_cells),
            ("checkpoint_interval", self.checkpoint_interval),
            ("epoch_length_ticks", self.epoch_length_ticks),
        ] {
            if v == 0 {
                return Err(SlaError::Zero(name));
            }
        }
        if self.checkpoint_interval > self.max_instructions {
            return Err(SlaError::IntervalTooLarge {
                interval: self.checkpoint_interval,
                max: self.max_instructions,
            });
        }
        Ok(())
    }
}

impl Default for Sla {
    fn default() -> Self {
        Sla {
            max_instructions: 1_000_000,
            max_memory_cells: 1024,
            checkpoint_interval: 1000,
            epoch_length_ticks: 1440,
        }
    }
}

impl Encode for Sla {
    fn encode(&self, e: &mut Encoder) {
        e.u64(self.max_instructions)
            .u64(self.max_memory_cells)
            .u64(self.checkpoint_interval)
            .u64(self.epoch_length_ticks);
    }
}

impl Decode for Sla {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Sla {
            max_instructions: d.u64()?,
            max_memory_cells: d.u64()?,
            checkpoint_interval: d.u64()?,
            epoch_length_ticks: d.u64()?,
        })
    }
}
