//! Flat-file chain dumps.
//!
//! Binary layout: magic `POVMCHN1`, difficulty `u8`, block count `u32`, then
//! per block a frame of `u32` length, the recorded 32-byte digest, and the
//! canonical block bytes. The JSON export carries the same content with
//! lowercase hex digests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chain::{validate_frames, Chain, ChainEntry, ValidationReport};
use super::Block;
use crate::codec::{Decode, DecodeError, Decoder, Encoder};
use crate::hashcash::Difficulty;

pub const CHAIN_MAGIC: &[u8; 8] = b"POVMCHN1";

#[derive(Debug, thiserror::Error)]
pub enum ChainFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad chain file framing: {0}")]
    Framing(#[from] DecodeError),
    #[error("not a chain file (bad magic)")]
    BadMagic,
    #[error("block {index}: {source}")]
    Block { index: usize, source: DecodeError },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn dump_chain_bin(chain: &Chain) -> Vec<u8> {
    let mut e = Encoder::default();
    e.raw(CHAIN_MAGIC).u8(chain.difficulty.0).len(chain.len());
    for entry in chain.entries() {
        let bytes = crate::codec::Encode::to_bytes(&entry.block);
        e.len(bytes.len()).digest(&entry.digest).raw(&bytes);
    }
    e.into_bytes()
}

struct Frames<'a> {
    difficulty: Difficulty,
    frames: Vec<(crate::Digest256, &'a [u8])>,
}

fn read_frames(bytes: &[u8]) -> Result<Frames<'_>, ChainFileError> {
    let mut d = Decoder::new(bytes);
    if d.raw(CHAIN_MAGIC.len())
        .map_err(|_| ChainFileError::BadMagic)?
        != CHAIN_MAGIC
    {
        return Err(ChainFileError::BadMagic);
    }
    let difficulty = Difficulty(d.u8()?);
    let n = d.len(36)?;
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        let len = d.u32()? as usize;
        let digest = d.digest()?;
        frames.push((digest, d.raw(len)?));
    }
    d.finish()?;
    Ok(Frames { difficulty, frames })
}

/// Strict load: every frame must decode.
pub fn load_chain_bin(bytes: &[u8]) -> Result<Chain, ChainFileError> {
    let f = read_frames(bytes)?;
    let mut entries = Vec::with_capacity(f.frames.len());
    for (index, (digest, raw)) in f.frames.into_iter().enumerate() {
        let block =
            Block::from_bytes(raw).map_err(|source| ChainFileError::Block { index, source })?;
        entries.push(ChainEntry { digest, block });
    }
    Ok(Chain::from_entries_unchecked(f.difficulty, entries))
}

/// Validates a binary dump. Framing problems are errors; a frame whose block
/// bytes do not decode is reported as a failure at that index.
pub fn verify_chain_file(bytes: &[u8]) -> Result<ValidationReport, ChainFileError> {
    let f = read_frames(bytes)?;
    let decoded: Vec<_> = f
        .frames
        .iter()
        .map(|(d, raw)| (*d, Block::from_bytes(raw)))
        .collect();
    Ok(validate_frames(
        f.difficulty,
        decoded
            .iter()
            .map(|(d, b)| (*d, b.as_ref().map_err(|e| e.to_string()))),
    ))
}

#[derive(Serialize, Deserialize)]
struct ChainJson {
    difficulty: Difficulty,
    blocks: Vec<ChainEntry>,
}

pub fn dump_chain_json(chain: &Chain) -> String {
    let doc = ChainJson {
        difficulty: chain.difficulty,
        blocks: chain.entries().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("chain serializes")
}

pub fn load_chain_json(s: &str) -> Result<Chain, ChainFileError> {
    let doc: ChainJson = serde_json::from_str(s)?;
    Ok(Chain::from_entries_unchecked(doc.difficulty, doc.blocks))
}

impl Chain {
    pub fn save(&self, bin: &Path, json: Option<&Path>) -> std::io::Result<()> {
        std::fs::write(bin, dump_chain_bin(self))?;
        if let Some(json) = json {
            std::fs::write(json, dump_chain_json(self))?;
        }
        Ok(())
    }
}
