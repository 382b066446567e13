use serde::{Deserialize, Serialize};

use super::prng::{prng_next, PrngState};
use super::program::Instruction;
use super::Job;
use crate::codec::Encoder;
use crate::digest::Digest256;
use crate::types::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapReason {
    StackUnderflow,
    /// Control fell off the end of the program without `HALT`.
    PcOutOfRange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    Completed,
    InstructionBudgetExceeded,
    MemoryExceeded,
    Trap(TrapReason),
}

impl ExecStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, ExecStatus::Completed)
    }

    pub fn is_sla_breach(&self) -> bool {
        matches!(
            self,
            ExecStatus::InstructionBudgetExceeded | ExecStatus::MemoryExceeded
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckpointKind {
    /// Emitted every `sla.checkpoint_interval` instructions.
    Interval,
    /// Emitted by a `CHECKPOINT` instruction.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub digest: Digest256,
    /// Instructions executed when the checkpoint was taken.
    pub instruction: u64,
    pub kind: CheckpointKind,
}

/// Everything a clone reports about one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// The job's single answer; `None` unless the run completed.
    pub output: Option<Word>,
    pub instructions_executed: u64,
    pub peak_memory_cells: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub status: ExecStatus,
}

impl ExecutionTrace {
    pub fn checkpoint_digests(&self) -> Vec<Digest256> {
        self.checkpoints.iter().map(|c| c.digest).collect()
    }

    /// Digest of the concatenated checkpoint digests.
    pub fn checkpoint_root(&self) -> Digest256 {
        Digest256::of_parts(self.checkpoints.iter().map(|c| &c.digest.0[..]))
    }

    pub fn interval_checkpoints(&self) -> usize {
        self.checkpoints
            .iter()
            .filter(|c| c.kind == CheckpointKind::Interval)
            .count()
    }
}

/// Full machine state as hashed into checkpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VmState {
    pub pc: usize,
    pub stack: Vec<Word>,
    pub memory: Vec<Word>,
    pub executed: u64,
}

impl VmState {
    fn words_in_use(&self) -> u64 {
        (self.stack.len() + self.memory.len()) as u64
    }
}

/// Digest of `(pc, stack, memory, instructions executed)` in canonical layout.
pub fn checkpoint_digest(state: &VmState) -> Digest256 {
    let mut e = Encoder::default();
    e.u64(state.pc as u64).len(state.stack.len());
    for &w in &state.stack {
        e.i64(w);
    }
    e.len(state.memory.len());
    for &w in &state.memory {
        e.i64(w);
    }
    e.u64(state.executed);
    Digest256::of(&e.into_bytes())
}

/// Deliberate deviations used to model faulty or dishonest clones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    /// Adds `delta` to memory cell `cell` once `at_instruction` instructions
    /// have executed, before the next one runs.
    PerturbMemory {
        at_instruction: u64,
        cell: u32,
        delta: Word,
    },
    /// Adds `delta` to the answer at `HALT`.
    CorruptOutput { delta: Word },
}

/// Runs `job` under its SLA. Breaches and traps are reported in the trace.
pub fn execute(job: &Job) -> ExecutionTrace {
    execute_with_fault(job, None)
}

pub fn execute_with_fault(job: &Job, fault: Option<Fault>) -> ExecutionTrace {
    let sla = &job.sla;
    let code = job.program.code();
    let mut st = VmState {
        memory: job.input.clone(),
        ..VmState::default()
    };
    let mut prng = PrngState(job.seed);
    let mut checkpoints = Vec::new();
    let mut peak = st.words_in_use();
    let mut output = None;

    let status = loop {
        if let Some(Fault::PerturbMemory {
            at_instruction,
            cell,
            delta,
        }) = fault
        {
            if st.executed == at_instruction {
                let cell = cell as usize;
                if cell >= st.memory.len() {
                    st.memory.resize(cell + 1, 0);
                }
                st.memory[cell] = st.memory[cell].wrapping_add(delta);
            }
        }
        if st.executed >= sla.max_instructions {
            break ExecStatus::InstructionBudgetExceeded;
        }
        let Some(&ins) = code.get(st.pc) else {
            break ExecStatus::Trap(TrapReason::PcOutOfRange);
        };

        let in_use = st.words_in_use();
        let grows_to = match ins {
            Instruction::Push(_) | Instruction::Dup | Instruction::Load(_) | Instruction::Rand => {
                in_use + 1
            }
            Instruction::Store(i) => {
                (st.stack.len() as u64).saturating_sub(1)
                    + st.memory.len().max(i as usize + 1) as u64
            }
            _ => in_use,
        };
        if grows_to > sla.max_memory_cells {
            break ExecStatus::MemoryExceeded;
        }

        let needs = match ins {
            Instruction::Add | Instruction::Sub | Instruction::Mul | Instruction::Cmp => 2,
            Instruction::Pop
            | Instruction::Dup
            | Instruction::Jz(_)
            | Instruction::Store(_)
            | Instruction::Halt => 1,
            _ => 0,
        };
        if st.stack.len() < needs {
            break ExecStatus::Trap(TrapReason::StackUnderflow);
        }

        st.pc += 1;
        let mut halted = false;
        match ins {
            Instruction::Push(v) => st.stack.push(v),
            Instruction::Pop => {
                st.stack.pop();
            }
            Instruction::Dup => {
                let top = *st.stack.last().expect("checked");
                st.stack.push(top);
            }
            Instruction::Add | Instruction::Sub | Instruction::Mul | Instruction::Cmp => {
                let b = st.stack.pop().expect("checked");
                let a = st.stack.pop().expect("checked");
                st.stack.push(match ins {
                    Instruction::Add => a.wrapping_add(b),
                    Instruction::Sub => a.wrapping_sub(b),
                    Instruction::Mul => a.wrapping_mul(b),
                    _ => a.cmp(&b) as Word,
                });
            }
            Instruction::Jmp(a) => st.pc = a as usize,
            Instruction::Jz(a) => {
                if st.stack.pop().expect("checked") == 0 {
                    st.pc = a as usize;
                }
            }
            Instruction::Load(i) => {
                let v = st.memory.get(i as usize).copied().unwrap_or(0);
                st.stack.push(v);
            }
            Instruction::Store(i) => {
                let v = st.stack.pop().expect("checked");
                let i = i as usize;
                if i >= st.memory.len() {
                    st.memory.resize(i + 1, 0);
                }
                st.memory[i] = v;
            }
            Instruction::Rand => {
                let (w, next) = prng_next(prng);
                prng = next;
                st.stack.push(w as Word);
            }
            Instruction::Checkpoint => {}
            Instruction::Halt => {
                let mut v = st.stack.pop().expect("checked");
                if let Some(Fault::CorruptOutput { delta }) = fault {
                    v = v.wrapping_add(delta);
                }
                output = Some(v);
                halted = true;
            }
        }
        st.executed += 1;
        peak = peak.max(st.words_in_use());

        if ins == Instruction::Checkpoint {
            checkpoints.push(Checkpoint {
                digest: checkpoint_digest(&st),
                instruction: st.executed,
                kind: CheckpointKind::Explicit,
            });
        }
        if st.executed.is_multiple_of(sla.checkpoint_interval) {
            checkpoints.push(Checkpoint {
                digest: checkpoint_digest(&st),
                instruction: st.executed,
                kind: CheckpointKind::Interval,
            });
        }
        if halted {
            break ExecStatus::Completed;
        }
    };

    ExecutionTrace {
        output,
        instructions_executed: st.executed,
        peak_memory_cells: peak,
        checkpoints,
        status,
    }
}
