use super::program::{Instruction, Program};
use crate::types::Word;

const FLIPS: u32 = 0;
const RUN: u32 = 1;
const CHECKPOINT_EVERY: Word = 64;

/// Counts fair coin flips until `k` heads come up in a row, and answers
/// with the flip count. Heads is the low bit of a `RAND` word; a
/// `CHECKPOINT` is emitted every 64 flips.
///
/// The instruction set has no bitwise operators, so bits are isolated with
/// wrapping multiplication: `x * 2^63` is zero iff `x` is even, and
/// `x * 2^58` is zero iff `x` is a multiple of 64.
pub fn coinflip_program(k: u32) -> Program {
    use Instruction::*;
    const LOOP: u32 = 4;
    const TAILS: u32 = 21;
    const AFTER_FLIP: u32 = 23;
    const EMIT: u32 = 28;
    const DONE: u32 = 30;
    let low_bit_mask = Word::MIN; // 2^63
    let cadence_mask = 1 << (64 - CHECKPOINT_EVERY.trailing_zeros());
    let code = vec![
        Push(0),
        Store(FLIPS),
        Push(0),
        Store(RUN),
        // LOOP: stop once the run reaches k
        Load(RUN),
        Push(k as Word),
        Sub,
        Jz(DONE),
        Load(FLIPS),
        Push(1),
        Add,
        Store(FLIPS),
        Rand,
        Push(low_bit_mask),
        Mul,
        Jz(TAILS),
        Load(RUN),
        Push(1),
        Add,
        Store(RUN),
        Jmp(AFTER_FLIP),
        // TAILS
        Push(0),
        Store(RUN),
        // AFTER_FLIP
        Load(FLIPS),
        Push(cadence_mask),
        Mul,
        Jz(EMIT),
        Jmp(LOOP),
        // EMIT
        Checkpoint,
        Jmp(LOOP),
        // DONE
        Load(FLIPS),
        Halt,
    ];
    debug_assert_eq!(code[TAILS as usize], Push(0));
    debug_assert_eq!(code[EMIT as usize], Checkpoint);
    Program::new(code).expect("static program is well-formed")
}

/// Expected flips for `k` heads in a row: 2^(k+1) - 2.
pub fn expected_flips(k: u32) -> f64 {
    2f64.powi(k as i32 + 1) - 2.0
}
