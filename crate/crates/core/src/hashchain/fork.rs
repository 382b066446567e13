use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{digest_block, Block};
use crate::digest::Digest256;
use crate::types::NodeId;

/// Competing tips at equal height. A tie is not broken when it appears; it
/// is decided by whichever head is extended first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForkSet {
    height: u64,
    heads: BTreeMap<Digest256, Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForkError {
    #[error("extension's parent {0} is not a fork head")]
    OrphanExtension(Digest256),
    #[error("head at height {got} does not match fork height {expected}")]
    HeightMismatch { expected: u64, got: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkResolution {
    pub winner: Digest256,
    pub winner_producer: NodeId,
    pub abandoned: Vec<Digest256>,
}

impl ForkSet {
    pub fn new(head: Block) -> ForkSet {
        let height = head.height;
        ForkSet {
            height,
            heads: BTreeMap::from([(digest_block(&head), head)]),
        }
    }

    pub fn insert(&mut self, head: Block) -> Result<Digest256, ForkError> {
        if head.height != self.height {
            return Err(ForkError::HeightMismatch {
                expected: self.height,
                got: head.height,
            });
        }
        let d = digest_block(&head);
        self.heads.insert(d, head);
        Ok(d)
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn contains(&self, digest: &Digest256) -> bool {
        self.heads.contains_key(digest)
    }

    pub fn heads(&self) -> impl Iterator<Item = (&Digest256, &Block)> {
        self.heads.iter()
    }
}

/// The head that `extension` builds on wins; every other head is abandoned.
pub fn resolve_fork(forks: &ForkSet, extension: &Block) -> Result<ForkResolution, ForkError> {
    let parent = extension.prev_digest;
    let Some(head) = forks.heads.get(&parent) else {
        return Err(ForkError::OrphanExtension(parent));
    };
    Ok(ForkResolution {
        winner: parent,
        winner_producer: head.producer,
        abandoned: forks
            .heads
            .keys()
            .filter(|d| **d != parent)
            .copied()
            .collect(),
    })
}
