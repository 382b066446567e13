//! Deterministic, instruction-metered stack VM for customer jobs.
//!
//! A job runs under an [`Sla`]: an instruction budget, a cap on VM words in
//! use (stack plus memory), and a checkpoint cadence. Every run yields an
//! [`ExecutionTrace`] whose checkpoint digests are reproducible bit-for-bit,
//! so redundant clones of the same job can be compared event by event.

mod coinflip;
mod prng;
mod program;
mod sla;
mod vm;

use serde::{Deserialize, Serialize};

use crate::codec::{Encode, Encoder};
use crate::digest::Digest256;
use crate::types::{JobId, NodeId, Word};

pub use coinflip::{coinflip_program, expected_flips};
pub use prng::{derive_seed, prng_next, PrngState, SplitMix64};
pub use program::{Instruction, ParseError, Program, ProgramError};
pub use sla::{Sla, SlaError};
pub use vm::{
    checkpoint_digest, execute, execute_with_fault, Checkpoint, CheckpointKind, ExecStatus,
    ExecutionTrace, Fault, VmState,
};

/// A unit of customer work producing a single answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub program: Program,
    pub input: Vec<Word>,
    pub sla: Sla,
    pub customer: NodeId,
    /// System-assigned and shared by every clone so randomized jobs stay comparable.
    pub seed: u64,
}

impl Job {
    /// Configuration fingerprint: program, SLA and seed.
    pub fn config_digest(&self) -> Digest256 {
        let mut e = Encoder::default();
        self.program.encode(&mut e);
        self.sla.encode(&mut e);
        e.u64(self.seed);
        Digest256::of(&e.into_bytes())
    }
}
