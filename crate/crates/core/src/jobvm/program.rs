use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};
use crate::types::Word;

/// The fourteen VM instructions.
///
/// Binary operators pop `b` then `a` and push `a op b` with wrapping
/// arithmetic. `CMP` pushes -1, 0 or 1 for `a < b`, `a == b`, `a > b`.
/// `JZ` pops and jumps when the value is zero. `LOAD` of a cell never
/// written reads 0; `STORE` grows memory as needed. `HALT` pops the answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instruction {
    Push(Word),
    Pop,
    Dup,
    Add,
    Sub,
    Mul,
    Cmp,
    Jmp(u32),
    Jz(u32),
    Load(u32),
    Store(u32),
    Rand,
    Checkpoint,
    Halt,
}

impl Instruction {
    pub fn mnemonic(&self) -> &'static str {
        use Instruction::*;
        match self {
            Push(_) => "PUSH",
            Pop => "POP",
            Dup => "DUP",
            Add => "ADD",
            Sub => "SUB",
            Mul => "MUL",
            Cmp => "CMP",
            Jmp(_) => "JMP",
            Jz(_) => "JZ",
            Load(_) => "LOAD",
            Store(_) => "STORE",
            Rand => "RAND",
            Checkpoint => "CHECKPOINT",
            Halt => "HALT",
        }
    }

    fn opcode(&self) -> u8 {
        use Instruction::*;
        match self {
            Push(_) => 0,
            Pop => 1,
            Dup => 2,
            Add => 3,
            Sub => 4,
            Mul => 5,
            Cmp => 6,
            Jmp(_) => 7,
            Jz(_) => 8,
            Load(_) => 9,
            Store(_) => 10,
            Rand => 11,
            Checkpoint => 12,
            Halt => 13,
        }
    }

    fn jump_target(&self) -> Option<u32> {
        match *self {
            Instruction::Jmp(a) | Instruction::Jz(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Instruction::*;
        match *self {
            Push(v) => write!(f, "PUSH {v}"),
            Jmp(a) | Jz(a) | Load(a) | Store(a) => write!(f, "{} {a}", self.mnemonic()),
            _ => f.write_str(self.mnemonic()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("program is empty")]
    Empty,
    #[error("instruction {at}: jump target {target} out of range (program length {len})")]
    JumpOutOfRange { at: usize, target: u32, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: unknown opcode `{op}`")]
    UnknownOpcode { line: usize, op: String },
    #[error("line {line}: `{op}` expects {expected}")]
    Operand {
        line: usize,
        op: String,
        expected: &'static str,
    },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// A well-formed instruction sequence; execution starts at index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    code: Vec<Instruction>,
}

impl Program {
    pub fn new(code: Vec<Instruction>) -> Result<Self, ProgramError> {
        if code.is_empty() {
            return Err(ProgramError::Empty);
        }
        for (at, ins) in code.iter().enumerate() {
            if let Some(target) = ins.jump_target() {
                if target as usize >= code.len() {
                    return Err(ProgramError::JumpOutOfRange {
                        at,
                        target,
                        len: code.len(),
                    });
                }
            }
        }
        Ok(Program { code })
    }

    pub fn code(&self) -> &[Instruction] {
        &self.code
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// Parses the text format: one instruction per line, decimal operands,
    /// `#` starts a comment, blank lines ignored. Jump targets are
    /// instruction indices.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut code = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut parts = body.split_whitespace();
            let op = parts.next().expect("non-empty line").to_ascii_uppercase();
            let arg = parts.next();
            if parts.next().is_some() {
                return Err(ParseError::Operand {
                    line,
                    op,
                    expected: "at most one operand",
                });
            }
            let word = |expected| -> Result<Word, ParseError> {
                arg.and_then(|a| a.parse().ok()).ok_or(ParseError::Operand {
                    line,
                    op: op.clone(),
                    expected,
                })
            };
            let index = |expected| -> Result<u32, ParseError> {
                arg.and_then(|a| a.parse().ok()).ok_or(ParseError::Operand {
                    line,
                    op: op.clone(),
                    expected,
                })
            };
            let nullary = |ins: Instruction| -> Result<Instruction, ParseError> {
                match arg {
                    None => Ok(ins),
                    Some(_) => Err(ParseError::Operand {
                        line,
                        op: op.clone(),
                        expected: "no operand",
                    }),
                }
            };
            let ins = match op.as_str() {
                "PUSH" => Instruction::Push(word("a signed 64-bit operand")?),
                "JMP" => Instruction::Jmp(index("an instruction index")?),
                "JZ" => Instruction::Jz(index("an instruction index")?),
                "LOAD" => Instruction::Load(index("a memory cell index")?),
                "STORE" => Instruction::Store(index("a memory cell index")?),
                "POP" => nullary(Instruction::Pop)?,
                "DUP" => nullary(Instruction::Dup)?,
                "ADD" => nullary(Instruction::Add)?,
                "SUB" => nullary(Instruction::Sub)?,
                "MUL" => nullary(Instruction::Mul)?,
                "CMP" => nullary(Instruction::Cmp)?,
                "RAND" => nullary(Instruction::Rand)?,
                "CHECKPOINT" => nullary(Instruction::Checkpoint)?,
                "HALT" => nullary(Instruction::Halt)?,
                _ => return Err(ParseError::UnknownOpcode { line, op }),
            };
            code.push(ins);
        }
        Ok(Program::new(code)?)
    }

    pub fn to_text(&self) -> String {
        self.code.iter().map(|i| format!("{i}\n")).collect()
    }
}

impl FromStr for Program {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Program::parse(s)
    }
}

impl Serialize for Program {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for Program {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl Encode for Program {
    fn encode(&self, e: &mut Encoder) {
        e.len(self.code.len());
        for ins in &self.code {
            e.u8(ins.opcode());
            match *ins {
                Instruction::Push(v) => {
                    e.i64(v);
                }
                Instruction::Jmp(a)
                | Instruction::Jz(a)
                | Instruction::Load(a)
                | Instruction::Store(a) => {
                    e.u32(a);
                }
                _ => {}
            }
        }
    }
}

impl Decode for Program {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let n = d.len(1)?;
        let mut code = Vec::with_capacity(n);
        for _ in 0..n {
            let offset = d.offset();
            let ins = match d.u8()? {
                0 => Instruction::Push(d.i64()?),
                1 => Instruction::Pop,
                2 => Instruction::Dup,
                3 => Instruction::Add,
                4 => Instruction::Sub,
                5 => Instruction::Mul,
                6 => Instruction::Cmp,
                7 => Instruction::Jmp(d.u32()?),
                8 => Instruction::Jz(d.u32()?),
                9 => Instruction::Load(d.u32()?),
                10 => Instruction::Store(d.u32()?),
                11 => Instruction::Rand,
                12 => Instruction::Checkpoint,
                13 => Instruction::Halt,
                tag => {
                    return Err(DecodeError::BadTag {
                        what: "opcode",
                        tag,
                        offset,
                    })
                }
            };
            code.push(ins);
        }
        Program::new(code).map_err(|e| DecodeError::Invalid(e.to_string()))
    }
}
